// SPDX-License-Identifier: Apache-2.0
#include "hpsed/nn/layers.hpp"

#include "hpsed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hpsed::nn {
namespace {

// Unfolded-input elements processed per GEMM, sized so the chunk stays in
// the per-core cache. At least one frequency row is always taken.
constexpr Eigen::Index kChunkElements = Eigen::Index{1} << 16;

int rows_per_chunk(Eigen::Index col_rows, int time) {
  return static_cast<int>(std::max<Eigen::Index>(1, kChunkElements / (col_rows * time)));
}

template <typename S>
void im2col(const Matrix<S>& x, int freq, int time, int k, int f0, int f1, Matrix<S>& col) {
  const int pad = k / 2;
  const int cin = static_cast<int>(x.rows());
  col.resize(static_cast<Eigen::Index>(cin) * k * k, static_cast<Eigen::Index>(f1 - f0) * time);
  for (int ci = 0; ci < cin; ++ci) {
    const S* src_channel = x.row(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        S* dst_row = col.row((ci * k + ky) * k + kx).data();
        const int shift = kx - pad;
        const int lo = std::max(0, -shift), hi = std::min(time, time - shift);
        for (int f = f0; f < f1; ++f) {
          S* dst = dst_row + static_cast<std::ptrdiff_t>(f - f0) * time;
          const int fs = f + ky - pad;
          if (fs < 0 || fs >= freq || lo >= hi) {
            std::fill(dst, dst + time, S(0));
            continue;
          }
          const S* src = src_channel + static_cast<std::ptrdiff_t>(fs) * time;
          std::fill(dst, dst + lo, S(0));
          std::copy(src + lo + shift, src + hi + shift, dst + lo);
          std::fill(dst + hi, dst + time, S(0));
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const Matrix<S>& col, int freq, int time, int k, int f0, int f1, Matrix<S>& dx) {
  const int pad = k / 2;
  const int cin = static_cast<int>(dx.rows());
  for (int ci = 0; ci < cin; ++ci) {
    S* dst_channel = dx.row(ci).data();
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const S* src_row = col.row((ci * k + ky) * k + kx).data();
        const int shift = kx - pad;
        const int lo = std::max(0, -shift), hi = std::min(time, time - shift);
        for (int f = f0; f < f1; ++f) {
          const int fs = f + ky - pad;
          if (fs < 0 || fs >= freq) continue;
          const S* src = src_row + static_cast<std::ptrdiff_t>(f - f0) * time;
          S* dst = dst_channel + static_cast<std::ptrdiff_t>(fs) * time + shift;
          for (int t = lo; t < hi; ++t) dst[t] += src[t];
        }
      }
    }
  }
}

template <typename S>
auto sigmoid_of(const Eigen::ArrayBase<S>& v) {
  using T = typename S::Scalar;
  return (T(1) + (-v).exp()).inverse();
}

}  // namespace

template <typename S>
void conv2d_forward(const Matrix<S>& x, int freq, int time, ConstMatRef<S> weight, ConstVecRef<S> bias, int k,
                    Matrix<S>& y) {
  if (x.cols() != static_cast<Eigen::Index>(freq) * time || weight.cols() != x.rows() * k * k)
    throw InvalidInput("conv2d: input shape does not match weights");
  y.resize(weight.rows(), x.cols());
  const int step = rows_per_chunk(weight.cols(), time);
  Matrix<S> col;
  for (int f0 = 0; f0 < freq; f0 += step) {
    const int f1 = std::min(freq, f0 + step);
    im2col(x, freq, time, k, f0, f1, col);
    y.middleCols(static_cast<Eigen::Index>(f0) * time, col.cols()).noalias() = weight * col;
  }
  y.colwise() += bias;
}

template <typename S>
void conv2d_backward(const Matrix<S>& x, int freq, int time, ConstMatRef<S> weight, int k, const Matrix<S>& dy,
                     MatRef<S> dweight, VecRef<S> dbias, Matrix<S>* dx) {
  if (dx) dx->setZero(x.rows(), x.cols());
  dbias += dy.rowwise().sum();
  const int step = rows_per_chunk(weight.cols(), time);
  Matrix<S> col, dcol;
  for (int f0 = 0; f0 < freq; f0 += step) {
    const int f1 = std::min(freq, f0 + step);
    im2col(x, freq, time, k, f0, f1, col);
    const auto dyc = dy.middleCols(static_cast<Eigen::Index>(f0) * time, col.cols());
    dweight.noalias() += dyc * col.transpose();
    if (dx) {
      dcol.noalias() = weight.transpose() * dyc;
      col2im_add(dcol, freq, time, k, f0, f1, *dx);
    }
  }
}

template <typename S>
void glu_forward(const Matrix<S>& ab, Matrix<S>& g) {
  const auto c = ab.rows() / 2;
  g = (ab.topRows(c).array() * sigmoid_of(ab.bottomRows(c).array())).matrix();
}

template <typename S>
void glu_backward(const Matrix<S>& ab, const Matrix<S>& dg, Matrix<S>& dab) {
  const auto c = ab.rows() / 2;
  dab.resize(ab.rows(), ab.cols());
  const auto a = ab.topRows(c).array();
  const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sig = sigmoid_of(ab.bottomRows(c).array());
  dab.topRows(c) = (dg.array() * sig).matrix();
  dab.bottomRows(c) = (dg.array() * a * sig * (S(1) - sig)).matrix();
}

template <typename S>
void se_forward(const Matrix<S>& x, ConstMatRef<S> w1, ConstVecRef<S> b1, ConstMatRef<S> w2, ConstVecRef<S> b2,
                Matrix<S>& y, SeCache<S>& cache) {
  cache.z = x.rowwise().mean();
  cache.u_pre = w1 * cache.z + b1;
  const Vector<S> u = cache.u_pre.cwiseMax(S(0));
  cache.s = (w2 * u + b2).unaryExpr([](S v) { return sigmoid(v); });
  y = cache.s.asDiagonal() * x;
}

template <typename S>
void se_backward(const Matrix<S>& x, const SeCache<S>& cache, ConstMatRef<S> w1, ConstMatRef<S> w2,
                 const Matrix<S>& dy, MatRef<S> dw1, VecRef<S> db1, MatRef<S> dw2, VecRef<S> db2, Matrix<S>& dx,
                 Vector<S>* ds) {
  const Vector<S> ds_local = dy.cwiseProduct(x).rowwise().sum();
  if (ds) *ds = ds_local;
  const Vector<S> ds_pre = ds_local.array() * cache.s.array() * (S(1) - cache.s.array());
  const Vector<S> u = cache.u_pre.cwiseMax(S(0));
  dw2.noalias() += ds_pre * u.transpose();
  db2 += ds_pre;
  Vector<S> du = w2.transpose() * ds_pre;
  for (Eigen::Index i = 0; i < du.size(); ++i)
    if (!(cache.u_pre(i) > S(0))) du(i) = S(0);
  dw1.noalias() += du * cache.z.transpose();
  db1 += du;
  const Vector<S> dz = w1.transpose() * du;
  dx = cache.s.asDiagonal() * dy;
  dx.colwise() += dz / static_cast<S>(x.cols());
}

template <typename S>
void pool_forward(const Matrix<S>& x, int freq, int time, int time_pool, int freq_pool, PoolType type, Matrix<S>& y,
                  std::vector<int>* argmax) {
  if (freq % freq_pool || time % time_pool) throw InvalidInput("pool: map size not divisible by pool size");
  const int fo = freq / freq_pool, to = time / time_pool;
  const auto channels = x.rows();
  y.resize(channels, static_cast<Eigen::Index>(fo) * to);
  if (type == PoolType::Max && argmax) argmax->assign(static_cast<std::size_t>(y.size()), 0);
  const S scale = S(1) / static_cast<S>(time_pool * freq_pool);
  if (type == PoolType::Average) {
    y.setZero();
    for (Eigen::Index c = 0; c < channels; ++c) {
      for (int f = 0; f < fo; ++f) {
        S* __restrict dst = y.row(c).data() + static_cast<std::ptrdiff_t>(f) * to;
        for (int df = 0; df < freq_pool; ++df) {
          const S* __restrict src = x.row(c).data() + static_cast<std::ptrdiff_t>(f * freq_pool + df) * time;
          if (time_pool == 1) {
            for (int t = 0; t < to; ++t) dst[t] += src[t];
          } else {
            for (int t = 0; t < to; ++t)
              for (int dt = 0; dt < time_pool; ++dt) dst[t] += src[t * time_pool + dt];
          }
        }
      }
    }
    y *= scale;
    return;
  }
  for (Eigen::Index c = 0; c < channels; ++c) {
    const S* src = x.row(c).data();
    S* dst = y.row(c).data();
    for (int f = 0; f < fo; ++f) {
      for (int t = 0; t < to; ++t) {
        S acc = -std::numeric_limits<S>::infinity();
        int best = 0;
        for (int df = 0; df < freq_pool; ++df) {
          for (int dt = 0; dt < time_pool; ++dt) {
            const int idx = (f * freq_pool + df) * time + t * time_pool + dt;
            if (src[idx] > acc) {
              acc = src[idx];
              best = idx;
            }
          }
        }
        const int out = f * to + t;
        dst[out] = acc;
        if (argmax) (*argmax)[static_cast<std::size_t>(c * y.cols() + out)] = best;
      }
    }
  }
}

template <typename S>
void pool_backward(const Matrix<S>& dy, int freq, int time, int time_pool, int freq_pool, PoolType type,
                   const std::vector<int>* argmax, Matrix<S>& dx) {
  const int fo = freq / freq_pool, to = time / time_pool;
  dx.setZero(dy.rows(), static_cast<Eigen::Index>(freq) * time);
  if (type == PoolType::Max) {
    for (Eigen::Index c = 0; c < dy.rows(); ++c) {
      const S* src = dy.row(c).data();
      S* dst = dx.row(c).data();
      for (int out = 0; out < fo * to; ++out) dst[(*argmax)[static_cast<std::size_t>(c * dy.cols() + out)]] += src[out];
    }
    return;
  }
  const S scale = S(1) / static_cast<S>(time_pool * freq_pool);
  for (Eigen::Index c = 0; c < dy.rows(); ++c) {
    for (int f = 0; f < fo; ++f) {
      const S* __restrict src = dy.row(c).data() + static_cast<std::ptrdiff_t>(f) * to;
      for (int df = 0; df < freq_pool; ++df) {
        S* __restrict dst = dx.row(c).data() + static_cast<std::ptrdiff_t>(f * freq_pool + df) * time;
        if (time_pool == 1) {
          for (int t = 0; t < to; ++t) dst[t] = src[t] * scale;
        } else {
          for (int t = 0; t < to; ++t)
            for (int dt = 0; dt < time_pool; ++dt) dst[t * time_pool + dt] = src[t] * scale;
        }
      }
    }
  }
}

template <typename S>
void batchnorm_forward(std::vector<Matrix<S>>& maps, ConstVecRef<S> gamma, ConstVecRef<S> beta,
                       const Vector<S>* running_mean, const Vector<S>* running_var, S eps,
                       BatchNormCache<S>& cache) {
  if (maps.empty()) return;
  const auto channels = maps.front().rows();
  if (running_mean && running_var) {
    cache.mean = *running_mean;
    cache.var = *running_var;
  } else {
    const S count = static_cast<S>(maps.size()) * static_cast<S>(maps.front().cols());
    cache.mean = Vector<S>::Zero(channels);
    for (const auto& m : maps) cache.mean += m.rowwise().sum();
    cache.mean /= count;
    cache.var = Vector<S>::Zero(channels);
    for (const auto& m : maps) cache.var += (m.colwise() - cache.mean).rowwise().squaredNorm();
    cache.var /= count;
  }
  cache.invstd = (cache.var.array() + eps).rsqrt();
  cache.xhat.resize(maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    cache.xhat[i] = cache.invstd.asDiagonal() * (maps[i].colwise() - cache.mean);
    maps[i] = gamma.asDiagonal() * cache.xhat[i];
    maps[i].colwise() += beta;
  }
}

template <typename S>
void batchnorm_backward(std::vector<Matrix<S>>& grads, const BatchNormCache<S>& cache, ConstVecRef<S> gamma,
                        bool batch_statistics, VecRef<S> dgamma, VecRef<S> dbeta) {
  if (grads.empty()) return;
  const auto channels = grads.front().rows();
  Vector<S> sum_dxhat = Vector<S>::Zero(channels), sum_dxhat_xhat = Vector<S>::Zero(channels);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    dgamma += grads[i].cwiseProduct(cache.xhat[i]).rowwise().sum();
    dbeta += grads[i].rowwise().sum();
    grads[i] = gamma.asDiagonal() * grads[i];  // now dL/dxhat
    sum_dxhat += grads[i].rowwise().sum();
    sum_dxhat_xhat += grads[i].cwiseProduct(cache.xhat[i]).rowwise().sum();
  }
  if (!batch_statistics) {
    for (auto& g : grads) g = cache.invstd.asDiagonal() * g;
    return;
  }
  const S count = static_cast<S>(grads.size()) * static_cast<S>(grads.front().cols());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    Matrix<S>& g = grads[i];
    g.noalias() -= (sum_dxhat_xhat / count).asDiagonal() * cache.xhat[i];
    g.colwise() -= sum_dxhat / count;
    g = cache.invstd.asDiagonal() * g;
  }
}

template <typename S>
void gru_forward(const Matrix<S>& x, ConstMatRef<S> w_ih, ConstMatRef<S> w_hh, ConstVecRef<S> b_ih,
                 ConstVecRef<S> b_hh, bool reverse, GruCache<S>& cache) {
  const auto steps = x.rows();
  const auto hidden = w_hh.cols();
  Matrix<S> gi = x * w_ih.transpose();
  gi.rowwise() += b_ih.transpose();
  cache.x = x;
  cache.reverse = reverse;
  cache.gh.resize(steps, 3 * hidden);
  cache.r.resize(steps, hidden);
  cache.z.resize(steps, hidden);
  cache.n.resize(steps, hidden);
  cache.h.resize(steps, hidden);
  Vector<S> h_prev = Vector<S>::Zero(hidden), gh(3 * hidden);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    gh.noalias() = w_hh * h_prev;
    gh += b_hh;
    cache.gh.row(t) = gh.transpose();
    for (Eigen::Index j = 0; j < hidden; ++j) {
      const S r = sigmoid(gi(t, j) + gh(j));
      const S z = sigmoid(gi(t, hidden + j) + gh(hidden + j));
      const S n = std::tanh(gi(t, 2 * hidden + j) + r * gh(2 * hidden + j));
      const S h = (S(1) - z) * n + z * h_prev(j);
      cache.r(t, j) = r;
      cache.z(t, j) = z;
      cache.n(t, j) = n;
      cache.h(t, j) = h;
    }
    h_prev = cache.h.row(t).transpose();
  }
}

template <typename S>
void gru_backward(const GruCache<S>& cache, ConstMatRef<S> w_ih, ConstMatRef<S> w_hh, const Matrix<S>& dh,
                  MatRef<S> dw_ih, MatRef<S> dw_hh, VecRef<S> db_ih, VecRef<S> db_hh, Matrix<S>& dx) {
  const auto steps = cache.x.rows();
  const auto hidden = w_hh.cols();
  Matrix<S> dgi(steps, 3 * hidden), dgh(steps, 3 * hidden), h_prev_all(steps, hidden);
  Vector<S> dh_next = Vector<S>::Zero(hidden);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const Eigen::Index t = cache.reverse ? steps - 1 - s : s;
    const Eigen::Index tp = cache.reverse ? t + 1 : t - 1;
    for (Eigen::Index j = 0; j < hidden; ++j) {
      const S hp = s > 0 ? cache.h(tp, j) : S(0);
      h_prev_all(t, j) = hp;
      const S r = cache.r(t, j), z = cache.z(t, j), n = cache.n(t, j);
      const S dht = dh(t, j) + dh_next(j);
      const S dn_pre = dht * (S(1) - z) * (S(1) - n * n);
      const S dz_pre = dht * (hp - n) * z * (S(1) - z);
      const S dr_pre = dn_pre * cache.gh(t, 2 * hidden + j) * r * (S(1) - r);
      dgi(t, j) = dr_pre;
      dgi(t, hidden + j) = dz_pre;
      dgi(t, 2 * hidden + j) = dn_pre;
      dgh(t, j) = dr_pre;
      dgh(t, hidden + j) = dz_pre;
      dgh(t, 2 * hidden + j) = dn_pre * r;
      dh_next(j) = dht * z;
    }
    dh_next.noalias() += w_hh.transpose() * dgh.row(t).transpose();
  }
  dw_hh.noalias() += dgh.transpose() * h_prev_all;
  db_hh += dgh.colwise().sum().transpose();
  dw_ih.noalias() += dgi.transpose() * cache.x;
  db_ih += dgi.colwise().sum().transpose();
  dx.noalias() = dgi * w_ih;
}

template <typename S>
void heads_forward(const Matrix<S>& h, ConstMatRef<S> w_strong, ConstVecRef<S> b_strong, ConstMatRef<S> w_att,
                   ConstVecRef<S> b_att, Vector<S>& weak, HeadCache<S>& cache) {
  Matrix<S> logits = h * w_strong.transpose();
  logits.rowwise() += b_strong.transpose();
  cache.p = logits.unaryExpr([](S v) { return sigmoid(v); });

  Matrix<S> att = h * w_att.transpose();
  att.rowwise() += b_att.transpose();
  const auto col_max = att.colwise().maxCoeff().eval();
  att.rowwise() -= col_max;
  att = att.array().exp().matrix();
  const auto col_sum = att.colwise().sum().eval();
  for (Eigen::Index c = 0; c < att.cols(); ++c) att.col(c) /= col_sum(c);
  cache.a = std::move(att);
  weak = cache.a.cwiseProduct(cache.p).colwise().sum().transpose();
}

template <typename S>
void heads_backward(const Matrix<S>& h, const HeadCache<S>& cache, ConstMatRef<S> w_strong, ConstMatRef<S> w_att,
                    const Matrix<S>* dp, const Vector<S>* dweak, MatRef<S> dw_strong, VecRef<S> db_strong,
                    MatRef<S> dw_att, VecRef<S> db_att, Matrix<S>& dh) {
  const auto steps = cache.p.rows(), classes = cache.p.cols();
  Matrix<S> dp_total = dp ? *dp : Matrix<S>::Zero(steps, classes);
  Matrix<S> datt_logits = Matrix<S>::Zero(steps, classes);
  if (dweak) {
    const auto dw_row = dweak->transpose();
    dp_total += (cache.a.array().rowwise() * dw_row.array()).matrix();
    const Matrix<S> da = (cache.p.array().rowwise() * dw_row.array()).matrix();
    const auto inner = cache.a.cwiseProduct(da).colwise().sum().eval();
    datt_logits = cache.a.cwiseProduct(Matrix<S>(da.rowwise() - inner));
  }
  const Matrix<S> dlogits = dp_total.cwiseProduct(cache.p.cwiseProduct((S(1) - cache.p.array()).matrix()));
  dw_strong.noalias() += dlogits.transpose() * h;
  db_strong += dlogits.colwise().sum().transpose();
  dw_att.noalias() += datt_logits.transpose() * h;
  db_att += datt_logits.colwise().sum().transpose();
  dh.noalias() = dlogits * w_strong;
  dh.noalias() += datt_logits * w_att;
}

#define HPSED_INSTANTIATE(S)                                                                                      \
  template void conv2d_forward<S>(const Matrix<S>&, int, int, ConstMatRef<S>, ConstVecRef<S>, int, Matrix<S>&);  \
  template void conv2d_backward<S>(const Matrix<S>&, int, int, ConstMatRef<S>, int, const Matrix<S>&, MatRef<S>, \
                                   VecRef<S>, Matrix<S>*);                                                       \
  template void glu_forward<S>(const Matrix<S>&, Matrix<S>&);                                                    \
  template void glu_backward<S>(const Matrix<S>&, const Matrix<S>&, Matrix<S>&);                                 \
  template void se_forward<S>(const Matrix<S>&, ConstMatRef<S>, ConstVecRef<S>, ConstMatRef<S>, ConstVecRef<S>,  \
                              Matrix<S>&, SeCache<S>&);                                                          \
  template void se_backward<S>(const Matrix<S>&, const SeCache<S>&, ConstMatRef<S>, ConstMatRef<S>,              \
                               const Matrix<S>&, MatRef<S>, VecRef<S>, MatRef<S>, VecRef<S>, Matrix<S>&,         \
                               Vector<S>*);                                                                      \
  template void pool_forward<S>(const Matrix<S>&, int, int, int, int, PoolType, Matrix<S>&, std::vector<int>*);  \
  template void pool_backward<S>(const Matrix<S>&, int, int, int, int, PoolType, const std::vector<int>*,       \
                                 Matrix<S>&);                                                                    \
  template void batchnorm_forward<S>(std::vector<Matrix<S>>&, ConstVecRef<S>, ConstVecRef<S>, const Vector<S>*, \
                                     const Vector<S>*, S, BatchNormCache<S>&);                                   \
  template void batchnorm_backward<S>(std::vector<Matrix<S>>&, const BatchNormCache<S>&, ConstVecRef<S>, bool,   \
                                      VecRef<S>, VecRef<S>);                                                     \
  template void gru_forward<S>(const Matrix<S>&, ConstMatRef<S>, ConstMatRef<S>, ConstVecRef<S>, ConstVecRef<S>, \
                               bool, GruCache<S>&);                                                              \
  template void gru_backward<S>(const GruCache<S>&, ConstMatRef<S>, ConstMatRef<S>, const Matrix<S>&, MatRef<S>, \
                                MatRef<S>, VecRef<S>, VecRef<S>, Matrix<S>&);                                    \
  template void heads_forward<S>(const Matrix<S>&, ConstMatRef<S>, ConstVecRef<S>, ConstMatRef<S>,               \
                                 ConstVecRef<S>, Vector<S>&, HeadCache<S>&);                                     \
  template void heads_backward<S>(const Matrix<S>&, const HeadCache<S>&, ConstMatRef<S>, ConstMatRef<S>,         \
                                  const Matrix<S>*, const Vector<S>*, MatRef<S>, VecRef<S>, MatRef<S>,          \
                                  VecRef<S>, Matrix<S>&);

HPSED_INSTANTIATE(float)
HPSED_INSTANTIATE(double)

#undef HPSED_INSTANTIATE

}  // namespace hpsed::nn
