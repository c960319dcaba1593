// SPDX-License-Identifier: Apache-2.0
#pragma once

// Building blocks of the PSE-CRNN. Feature maps are C x (F*T) row-major
// matrices: row c holds channel c with frequency as the outer index.
// Backward functions accumulate (+=) into parameter gradients and
// overwrite input gradients.

#include "hpsed/params.hpp"

#include <vector>

namespace hpsed::nn {

template <typename S>
using MatRef = Eigen::Ref<Matrix<S>>;
template <typename S>
using ConstMatRef = Eigen::Ref<const Matrix<S>>;
template <typename S>
using VecRef = Eigen::Ref<Vector<S>>;
template <typename S>
using ConstVecRef = Eigen::Ref<const Vector<S>>;

/// Same-padded, stride-1 2D convolution with odd kernel k.
/// weight is Cout x (Cin*k*k) in (ci, ky, kx) order; ky runs along frequency.
template <typename S>
void conv2d_forward(const Matrix<S>& x, int freq, int time, ConstMatRef<S> weight, ConstVecRef<S> bias, int k,
                    Matrix<S>& y);

/// dx may be null when the input gradient is not needed.
template <typename S>
void conv2d_backward(const Matrix<S>& x, int freq, int time, ConstMatRef<S> weight, int k, const Matrix<S>& dy,
                     MatRef<S> dweight, VecRef<S> dbias, Matrix<S>* dx);

/// Rows [0, C) of `ab` are the linear branch, rows [C, 2C) the gate.
/// g = a * sigmoid(b).
template <typename S>
void glu_forward(const Matrix<S>& ab, Matrix<S>& g);
template <typename S>
void glu_backward(const Matrix<S>& ab, const Matrix<S>& dg, Matrix<S>& dab);

/// Squeeze-excitation: z = spatial mean, s = sigmoid(W2 relu(W1 z + b1) + b2),
/// y_c = s_c * x_c.
template <typename S>
struct SeCache {
  Vector<S> z, u_pre, s;
};

template <typename S>
void se_forward(const Matrix<S>& x, ConstMatRef<S> w1, ConstVecRef<S> b1, ConstMatRef<S> w2, ConstVecRef<S> b2,
                Matrix<S>& y, SeCache<S>& cache);

/// ds, when given, receives dL/ds_c = sum over positions of dy * x.
template <typename S>
void se_backward(const Matrix<S>& x, const SeCache<S>& cache, ConstMatRef<S> w1, ConstMatRef<S> w2,
                 const Matrix<S>& dy, MatRef<S> dw1, VecRef<S> db1, MatRef<S> dw2, VecRef<S> db2, Matrix<S>& dx,
                 Vector<S>* ds = nullptr);

enum class PoolType { Average, Max };

/// Pools (time_pool, freq_pool) windows; F and T must be divisible.
/// argmax is filled for max pooling only.
template <typename S>
void pool_forward(const Matrix<S>& x, int freq, int time, int time_pool, int freq_pool, PoolType type, Matrix<S>& y,
                  std::vector<int>* argmax);
template <typename S>
void pool_backward(const Matrix<S>& dy, int freq, int time, int time_pool, int freq_pool, PoolType type,
                   const std::vector<int>* argmax, Matrix<S>& dx);

/// Batch normalisation over a batch of C x P maps.
template <typename S>
struct BatchNormCache {
  Vector<S> mean, var, invstd;
  std::vector<Matrix<S>> xhat;
};

/// Train mode: statistics over every clip and position. Eval mode: the
/// given running statistics.
template <typename S>
void batchnorm_forward(std::vector<Matrix<S>>& maps, ConstVecRef<S> gamma, ConstVecRef<S> beta,
                       const Vector<S>* running_mean, const Vector<S>* running_var, S eps,
                       BatchNormCache<S>& cache);
template <typename S>
void batchnorm_backward(std::vector<Matrix<S>>& grads, const BatchNormCache<S>& cache, ConstVecRef<S> gamma,
                        bool batch_statistics, VecRef<S> dgamma, VecRef<S> dbeta);

/// Single-direction GRU (gate order r, z, n):
///   r = sig(Wir x + bir + Whr h + bhr), z = sig(Wiz x + biz + Whz h + bhz)
///   n = tanh(Win x + bin + r * (Whn h + bhn)), h' = (1 - z) n + z h.
/// `reverse` runs from the last step to the first; outputs stay in input order.
template <typename S>
struct GruCache {
  Matrix<S> x;             // T x I
  Matrix<S> gh;            // T x 3H, W_hh h_prev + b_hh
  Matrix<S> r, z, n, h;    // T x H
  bool reverse = false;
};

template <typename S>
void gru_forward(const Matrix<S>& x, ConstMatRef<S> w_ih, ConstMatRef<S> w_hh, ConstVecRef<S> b_ih,
                 ConstVecRef<S> b_hh, bool reverse, GruCache<S>& cache);
template <typename S>
void gru_backward(const GruCache<S>& cache, ConstMatRef<S> w_ih, ConstMatRef<S> w_hh, const Matrix<S>& dh,
                  MatRef<S> dw_ih, MatRef<S> dw_hh, VecRef<S> db_ih, VecRef<S> db_hh, Matrix<S>& dx);

/// Strong head: p = sigmoid(h Ws^T + bs), per frame.
/// Weak head: a = softmax over time of (h Wa^T + ba) per class,
/// weak_c = sum_t a_tc p_tc.
template <typename S>
struct HeadCache {
  Matrix<S> p, a;  // T x C
};

template <typename S>
void heads_forward(const Matrix<S>& h, ConstMatRef<S> w_strong, ConstVecRef<S> b_strong, ConstMatRef<S> w_att,
                   ConstVecRef<S> b_att, Vector<S>& weak, HeadCache<S>& cache);
template <typename S>
void heads_backward(const Matrix<S>& h, const HeadCache<S>& cache, ConstMatRef<S> w_strong, ConstMatRef<S> w_att,
                    const Matrix<S>* dp, const Vector<S>* dweak, MatRef<S> dw_strong, VecRef<S> db_strong,
                    MatRef<S> dw_att, VecRef<S> db_att, Matrix<S>& dh);

template <typename S>
inline S sigmoid(S x) {
  return x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

}  // namespace hpsed::nn
