// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

namespace hpsed {

struct Waveform {
  std::vector<float> samples;
  int sample_rate = 44100;
};

/// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit float samples.
/// Only 44.1 kHz is accepted; there is no resampler.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& wav);

}  // namespace hpsed
