// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/params.hpp"

#include <cstdint>

namespace hpsed {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector<float> m;
  Vector<float> v;
  std::int64_t t = 0;

  static AdamState zeros(Eigen::Index n) { return {Vector<float>::Zero(n), Vector<float>::Zero(n), 0}; }
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(ParamSet<float>& params, const ParamSet<float>& grads, AdamState& state, const AdamConfig& config);

/// Rescales grads so their global L2 norm is at most max_norm (no-op when
/// max_norm <= 0). Returns the norm before clipping.
double clip_grad_norm(ParamSet<float>& grads, double max_norm);

/// teacher <- decay * teacher + (1 - decay) * student. Throws InvalidInput on
/// layout mismatch or decay outside [0, 1].
template <typename S>
void ema_update(ParamSet<S>& teacher, const ParamSet<S>& student, double decay);

/// min(target, (step + 1) / (step + 10)): the teacher tracks the student
/// closely for the first few updates.
double ema_decay_at(std::int64_t step, double target, bool warmup = true);

}  // namespace hpsed
