// SPDX-License-Identifier: Apache-2.0
#include "hpsed/augment.hpp"

#include "hpsed/errors.hpp"

#include <cmath>
#include <cstdlib>

namespace hpsed {
namespace {

int wrap(long long i, long long n) { return static_cast<int>(((i % n) + n) % n); }

}  // namespace

Grid add_white_noise(const Grid& linear_mel, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidInput("add_white_noise: sigma must be nonnegative");
  if (sigma == 0.0 || linear_mel.size() == 0) return linear_mel;
  const double stddev = sigma * linear_mel.cast<double>().mean();
  Rng rng = make_stream(seed, "white-noise");
  std::normal_distribution<double> normal(0.0, 1.0);
  Grid out(linear_mel.rows(), linear_mel.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double v = linear_mel.data()[i] + stddev * normal(rng);
    out.data()[i] = static_cast<float>(v > 0.0 ? v : 0.0);
  }
  return out;
}

Grid temporal_shift(const Grid& spec, int shift) {
  const auto n = spec.cols();
  if (n == 0) return spec;
  Grid out(spec.rows(), n);
  for (Eigen::Index t = 0; t < n; ++t) out.col(wrap(t + shift, n)) = spec.col(t);
  return out;
}

Grid freq_shift(const Grid& spec, int bins) {
  if (std::abs(bins) > kMaxFreqShift) throw InvalidInput("freq_shift: |bins| must be <= 6");
  const auto n = spec.rows();
  if (n == 0) return spec;
  Grid out(n, spec.cols());
  for (Eigen::Index r = 0; r < n; ++r) out.row(wrap(r + bins, n)) = spec.row(r);
  return out;
}

StrongLabelGrid shift_strong_labels(const StrongLabelGrid& grid, int input_frame_shift, int pool_factor) {
  if (pool_factor < 1) throw InvalidInput("shift_strong_labels: pool factor must be >= 1");
  const auto frames = static_cast<int>(std::lround(static_cast<double>(input_frame_shift) / pool_factor));
  const auto n = grid.rows();
  if (n == 0) return grid;
  StrongLabelGrid out(n, grid.cols());
  for (Eigen::Index t = 0; t < n; ++t) out.row(wrap(t + frames, n)) = grid.row(t);
  return out;
}

AugmentationSpec sample_augmentation(const AugmentationPolicy& policy, int frames, Rng& rng) {
  AugmentationSpec spec;
  spec.noise_sigma = policy.noise_sigma;
  if (policy.time_shift && frames > 0) spec.time_shift = std::uniform_int_distribution<int>(0, frames - 1)(rng);
  if (policy.max_freq_shift > 0) {
    const int m = std::min(policy.max_freq_shift, kMaxFreqShift);
    spec.freq_shift = std::uniform_int_distribution<int>(-m, m)(rng);
  }
  spec.rng_seed = rng();
  return spec;
}

AugmentedClip apply_augmentation(const Clip& clip, const AugmentationSpec& spec, double log_floor) {
  AugmentedClip out;
  out.applied = spec;
  out.clip = clip;
  Grid& g = out.clip.spec;
  if (spec.noise_sigma > 0.0) {
    Grid linear = ((g.array().cast<double>().exp()) - log_floor).cwiseMax(0.0).cast<float>();
    linear = add_white_noise(linear, spec.noise_sigma, spec.rng_seed);
    g = (linear.array().cast<double>() + log_floor).log().cast<float>();
  }
  if (spec.time_shift != 0) g = temporal_shift(g, spec.time_shift);
  if (spec.freq_shift != 0) g = freq_shift(g, spec.freq_shift);
  if (clip.strong) {
    const int pool = static_cast<int>(clip.spec.cols() / std::max<Eigen::Index>(1, clip.strong->rows()));
    out.clip.strong = shift_strong_labels(*clip.strong, spec.time_shift, std::max(1, pool));
    out.shifted_strong_labels = out.clip.strong;
  }
  return out;
}

std::pair<AugmentedClip, AugmentedClip> make_two_augmentations(const Clip& clip, const AugmentationPolicy& policy,
                                                               std::uint64_t seed) {
  Rng rng_a = make_stream(seed, "aug-a");
  Rng rng_b = make_stream(seed, "aug-b");
  const int frames = static_cast<int>(clip.spec.cols());
  const AugmentationSpec a = sample_augmentation(policy, frames, rng_a);
  const AugmentationSpec b = sample_augmentation(policy, frames, rng_b);
  return {apply_augmentation(clip, a, policy.log_floor), apply_augmentation(clip, b, policy.log_floor)};
}

}  // namespace hpsed
