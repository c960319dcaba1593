// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/augment.hpp"
#include "hpsed/losses.hpp"
#include "hpsed/model.hpp"
#include "hpsed/objectives.hpp"
#include "hpsed/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace hpsed {

enum class Principle {
  Cct,          // cross-augmented mixing of D with a shuffled, augmented copy
  M3,           // mixing across two independent augmentations
  MeanTeacher,  // no mixing; the student sees augmented clips
};

std::string to_string(Principle p);
/// "cct", "m3" or "mean-teacher"; throws InvalidInput otherwise.
Principle parse_principle(std::string_view name);

struct TrainingConfig {
  Principle principle = Principle::Cct;
  double alpha = 1.0;  // Beta(alpha, alpha) mixing coefficient
  double w_max = 1.0;
  long long ramp_steps = 1000;
  double ema_decay = 0.999;
  bool ema_warmup = true;
  double learning_rate = 1e-3;
  double grad_clip = 5.0;
  long long steps = 1000;
  std::uint64_t seed = 1;
  int weak_batch = 6;
  int strong_batch = 6;
  int unlabeled_batch = 12;
  bool augment = true;
  AugmentationPolicy augmentation;
  SupervisedTargets supervised_targets = SupervisedTargets::MixedLabels;

  /// Throws InvalidInput for values outside their domain.
  void validate() const;
};

/// Feature-space pools the sampler draws from.
struct TrainingPools {
  const std::vector<Clip>* weak = nullptr;
  const std::vector<Clip>* strong = nullptr;
  const std::vector<Clip>* unlabeled = nullptr;
};

struct TrainingState {
  ModelState<float> student;
  ModelState<float> teacher;
  AdamState adam;
  long long step = 0;
};

/// Indices drawn from a pool of `pool_size` clips at `step`. Each pool is
/// walked in per-cycle random order, so a full cycle visits every clip once.
std::vector<int> sample_indices(std::uint64_t seed, std::string_view pool, int pool_size, int per_batch,
                                long long step);

class Trainer {
 public:
  Trainer(ArchitectureConfig architecture, TrainingConfig config, TrainingPools pools);

  const PseCrnn<float>& model() const { return model_; }
  const TrainingConfig& config() const { return config_; }

  /// Student from the "init" stream of the seed, teacher equal to it.
  TrainingState initial_state() const;

  Batch sample_batch(long long step) const;

  /// One optimisation step at state.step; advances the step counter.
  /// Throws DivergenceError on a non-finite loss or gradient, leaving
  /// `state` untouched.
  LossBundle step(TrainingState& state) const;

  using StepCallback = std::function<void(const TrainingState&, const LossBundle&)>;
  /// Steps until state.step == config().steps, calling `on_step` after each.
  void run(TrainingState& state, const StepCallback& on_step = {}) const;

 private:
  ArchitectureConfig architecture_;
  TrainingConfig config_;
  TrainingPools pools_;
  PseCrnn<float> model_;
};

/// One line-delimited JSON record of the loss log.
std::string loss_record(long long step, const LossBundle& losses);

}  // namespace hpsed
