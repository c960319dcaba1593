// SPDX-License-Identifier: Apache-2.0
#include "hpsed/losses.hpp"

#include <algorithm>
#include <cmath>

namespace hpsed {

double sample_lambda(double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw InvalidInput("sample_lambda: alpha must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  for (;;) {
    const double x = gamma(rng), y = gamma(rng);
    const double l = x / (x + y);
    if (l > 0.0 && l < 1.0) return l;
  }
}

double consistency_weight(long long step, double w_max, long long ramp_steps) {
  if (step < 0) throw InvalidInput("consistency_weight: step must be nonnegative");
  if (ramp_steps <= 0 || step >= ramp_steps) return w_max;
  const double phase = 1.0 - static_cast<double>(step) / static_cast<double>(ramp_steps);
  return w_max * std::exp(-5.0 * phase * phase);
}

template <typename S>
S binary_cross_entropy(const Eigen::Ref<const Matrix<S>>& pred, const Eigen::Ref<const Matrix<S>>& target,
                       Matrix<S>* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidInput("binary_cross_entropy: shape mismatch");
  const auto count = pred.size();
  if (count == 0) {
    if (grad) grad->resize(pred.rows(), pred.cols());
    return S(0);
  }
  const S lo = static_cast<S>(1e-7), hi = S(1) - lo;
  if (grad) grad->resize(pred.rows(), pred.cols());
  S acc = 0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const S p = std::clamp(pred(r, c), lo, hi);
      const S y = target(r, c);
      acc -= y * std::log(p) + (S(1) - y) * std::log(S(1) - p);
      if (grad) (*grad)(r, c) = (-y / p + (S(1) - y) / (S(1) - p)) / static_cast<S>(count);
    }
  }
  return acc / static_cast<S>(count);
}

template <typename S>
S mean_squared_error(const Eigen::Ref<const Matrix<S>>& pred, const Eigen::Ref<const Matrix<S>>& target,
                     Matrix<S>* grad) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw InvalidInput("mean_squared_error: shape mismatch");
  const auto count = pred.size();
  if (count == 0) {
    if (grad) grad->resize(pred.rows(), pred.cols());
    return S(0);
  }
  const Matrix<S> diff = pred - target;
  if (grad) *grad = diff * (S(2) / static_cast<S>(count));
  return diff.squaredNorm() / static_cast<S>(count);
}

template float binary_cross_entropy<float>(const Eigen::Ref<const Matrix<float>>&,
                                           const Eigen::Ref<const Matrix<float>>&, Matrix<float>*);
template double binary_cross_entropy<double>(const Eigen::Ref<const Matrix<double>>&,
                                             const Eigen::Ref<const Matrix<double>>&, Matrix<double>*);
template float mean_squared_error<float>(const Eigen::Ref<const Matrix<float>>&,
                                         const Eigen::Ref<const Matrix<float>>&, Matrix<float>*);
template double mean_squared_error<double>(const Eigen::Ref<const Matrix<double>>&,
                                           const Eigen::Ref<const Matrix<double>>&, Matrix<double>*);

}  // namespace hpsed
