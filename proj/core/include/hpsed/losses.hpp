// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/errors.hpp"
#include "hpsed/params.hpp"
#include "hpsed/random.hpp"

#include <Eigen/Core>

namespace hpsed {

/// The four loss terms of one batch and how they combine:
/// total = l_w + l_s + w_t * (l_cw + l_cs).
struct LossBundle {
  double l_w = 0.0;
  double l_s = 0.0;
  double l_cw = 0.0;
  double l_cs = 0.0;
  double lambda = 1.0;
  double w_t = 0.0;
  double total = 0.0;

  void finalize() { total = l_w + l_s + w_t * (l_cw + l_cs); }
};

/// lambda * a + (1 - lambda) * b, evaluated as b + lambda * (a - b) so that
/// identical arguments and lambda = 0 reproduce b bit-exactly; lambda = 1
/// returns a unchanged.
template <typename A, typename B>
auto mix(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double lambda) {
  using Plain = typename A::PlainObject;
  using S = typename A::Scalar;
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("mix: shape mismatch");
  if (lambda == 1.0) return Plain(a);
  const S l = static_cast<S>(lambda);
  return Plain(b + l * (a - b));
}

inline double mix(double a, double b, double lambda) { return lambda == 1.0 ? a : b + lambda * (a - b); }

/// One Beta(alpha, alpha) draw strictly inside (0, 1).
double sample_lambda(double alpha, Rng& rng);

/// w_max * exp(-5 (1 - min(step / ramp_steps, 1))^2).
double consistency_weight(long long step, double w_max, long long ramp_steps);

/// Mean binary cross-entropy; probabilities are clamped to [1e-7, 1 - 1e-7]
/// inside the logarithms. grad (optional) receives d(mean)/d(pred).
template <typename S>
S binary_cross_entropy(const Eigen::Ref<const Matrix<S>>& pred, const Eigen::Ref<const Matrix<S>>& target,
                       Matrix<S>* grad = nullptr);

/// Mean squared error over all entries.
template <typename S>
S mean_squared_error(const Eigen::Ref<const Matrix<S>>& pred, const Eigen::Ref<const Matrix<S>>& target,
                     Matrix<S>* grad = nullptr);

}  // namespace hpsed
