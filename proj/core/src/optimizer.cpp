// SPDX-License-Identifier: Apache-2.0
#include "hpsed/optimizer.hpp"

#include "hpsed/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hpsed {

void adam_step(ParamSet<float>& params, const ParamSet<float>& grads, AdamState& state, const AdamConfig& config) {
  const auto n = params.values.size();
  if (grads.values.size() != n) throw InvalidInput("adam_step: gradient size mismatch");
  if (state.m.size() != n || state.v.size() != n) throw InvalidInput("adam_step: optimizer state size mismatch");
  ++state.t;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const double step = config.learning_rate / c1;
  const double sq = std::sqrt(c2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = grads.values[i];
    const double m = b1 * state.m[i] + (1.0 - b1) * g;
    const double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    params.values[i] -= static_cast<float>(step * m / (std::sqrt(v) / sq + config.eps));
  }
}

double clip_grad_norm(ParamSet<float>& grads, double max_norm) {
  const double norm = grads.values.cast<double>().norm();
  if (max_norm > 0.0 && norm > max_norm) grads.values *= static_cast<float>(max_norm / (norm + 1e-6));
  return norm;
}

template <typename S>
void ema_update(ParamSet<S>& teacher, const ParamSet<S>& student, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw InvalidInput("ema_update: decay must lie in [0, 1]");
  if (!(teacher.layout == student.layout)) throw InvalidInput("ema_update: teacher and student layouts differ");
  if (decay == 1.0) return;
  const S d = static_cast<S>(decay);
  teacher.values = d * teacher.values + (S(1) - d) * student.values;
}

double ema_decay_at(std::int64_t step, double target, bool warmup) {
  if (!warmup) return target;
  return std::min(target, static_cast<double>(step + 1) / static_cast<double>(step + 10));
}

template void ema_update<float>(ParamSet<float>&, const ParamSet<float>&, double);
template void ema_update<double>(ParamSet<double>&, const ParamSet<double>&, double);

}  // namespace hpsed
