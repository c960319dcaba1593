// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/types.hpp"
#include "hpsed/wav.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hpsed {

enum class GeneratorKind { Tone, Chirp, NoiseBurst, HarmonicStack };

struct SynthClassSpec {
  int class_id = 0;
  GeneratorKind kind = GeneratorKind::Tone;
  double min_duration = 0.5;  // seconds
  double max_duration = 2.0;
  double f_low = 0.0;   // Hz; chirps sweep from f_low to f_high
  double f_high = 0.0;  // (downward when f_low > f_high)
};

const std::array<SynthClassSpec, kNumClasses>& synth_classes();

/// Event layout of one generated clip; audio is rendered from `seed`.
struct ClipPlan {
  std::string id;
  EventList events;
  std::uint64_t seed = 0;
};

/// Plans `count` clips of one pool. Each clip holds 1-3 events of distinct
/// classes; classes are drawn least-used first so pools stay balanced.
/// Times are whole milliseconds.
std::vector<ClipPlan> plan_pool(std::uint64_t seed, std::string_view pool, int count);

/// Pink-noise background plus the planned events, 10 s at 44.1 kHz.
Waveform render_clip(const ClipPlan& plan);

struct DatasetCounts {
  int weak = 50;
  int strong = 50;
  int unlabeled = 400;
  int validation = 100;
};

/// Writes audio/<pool>/<id> WAVs plus weak.tsv, strong.tsv, validation.tsv
/// and unlabeled.tsv under `out`. Byte-identical for a fixed seed.
void generate_dataset(const std::filesystem::path& out, std::uint64_t seed, const DatasetCounts& counts);

}  // namespace hpsed
