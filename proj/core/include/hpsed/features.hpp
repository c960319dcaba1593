// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/types.hpp"
#include "hpsed/wav.hpp"

#include <filesystem>
#include <vector>

namespace hpsed {

struct FeatureConfig {
  int n_fft = 2048;
  int hop = 431;
  int n_mels = 128;
  double fmin = 0.0;
  double fmax = 22050.0;
  double log_floor = 1e-10;
  /// Frame count after right-padding with log(log_floor).
  int frames = 1024;

  /// Desk-scale front end: one frame per network output frame (hop 4 x 431).
  static FeatureConfig reduced() {
    FeatureConfig c;
    c.hop = 1724;
    c.frames = 256;
    return c;
  }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct MelSpectrogram {
  Grid values;  // n_mels x frames
  double frame_hop_seconds = 431.0 / kSampleRate;
};

/// Pads with zeros or truncates at the end to exactly 10 s.
Waveform normalize_duration(const Waveform& w);

/// Triangular filters on the HTK mel scale, unit peak, over rfft bins.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);

  int num_bands() const { return static_cast<int>(filters_.size()); }
  int num_bins() const { return n_bins_; }
  /// Center frequency in Hz of each band.
  const std::vector<double>& centers() const { return centers_; }
  /// Dense weight matrix, bands x bins.
  Eigen::MatrixXd dense() const;

  void apply(const double* magnitude, float* out_bands) const;

  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  struct Filter {
    int first_bin = 0;
    std::vector<double> weights;
  };
  int n_bins_;
  std::vector<Filter> filters_;
  std::vector<double> centers_;
};

/// Linear mel magnitudes, bands x analysed frames (no padding).
Grid mel_energies(const Waveform& w, const FeatureConfig& cfg = {});

/// log(mel + log_floor), right-padded with log(log_floor) to cfg.frames.
MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg = {});

/// Number of frames produced by non-centered framing before padding.
int analysed_frames(int num_samples, const FeatureConfig& cfg);

/// Binary feature cache: "HPSED1\0\0", u32 bands, u32 frames, then
/// little-endian float32 values with bands as the outer index.
void write_feature_cache(const std::filesystem::path& path, const Grid& spec);
Grid read_feature_cache(const std::filesystem::path& path);

}  // namespace hpsed
