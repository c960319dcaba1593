// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/random.hpp"
#include "hpsed/types.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace hpsed {

/// Largest frequency roll: 5% of 128 mel bands, rounded down.
inline constexpr int kMaxFreqShift = 6;

struct AugmentationSpec {
  double noise_sigma = 0.0;  // relative to the clip's mean linear energy
  int time_shift = 0;        // input frames, wrap-around
  int freq_shift = 0;        // mel bins, |shift| <= kMaxFreqShift
  std::uint64_t rng_seed = 0;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

/// How AugmentationSpecs are drawn.
struct AugmentationPolicy {
  double noise_sigma = 0.05;
  bool time_shift = true;  // uniform over all frames
  int max_freq_shift = kMaxFreqShift;
  double log_floor = 1e-10;

  static AugmentationPolicy none() { return {0.0, false, 0, 1e-10}; }
};

struct AugmentedClip {
  Clip clip;  // spec and labels after augmentation
  AugmentationSpec applied;
  std::optional<StrongLabelGrid> shifted_strong_labels;
};

/// Zero-mean Gaussian noise with std sigma * mean(grid), clamped at 0.
/// The grid holds linear (pre-log) energies.
Grid add_white_noise(const Grid& linear_mel, double sigma, std::uint64_t seed);

/// out(:, t) = in(:, t - shift mod T).
Grid temporal_shift(const Grid& spec, int shift);

/// out(r, :) = in(r - bins mod R). Throws InvalidInput when |bins| > 6.
Grid freq_shift(const Grid& spec, int bins);

/// Rolls label rows by round(input_frame_shift / pool_factor) output frames.
StrongLabelGrid shift_strong_labels(const StrongLabelGrid& grid, int input_frame_shift, int pool_factor = 4);

AugmentationSpec sample_augmentation(const AugmentationPolicy& policy, int frames, Rng& rng);

/// Applies noise (through the linear domain), then the time and frequency
/// rolls. Strong labels follow the time roll; weak labels are untouched.
AugmentedClip apply_augmentation(const Clip& clip, const AugmentationSpec& spec, double log_floor = 1e-10);

/// Two independently drawn augmentations of the same clip.
std::pair<AugmentedClip, AugmentedClip> make_two_augmentations(const Clip& clip, const AugmentationPolicy& policy,
                                                               std::uint64_t seed);

}  // namespace hpsed
