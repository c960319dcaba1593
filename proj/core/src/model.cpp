// SPDX-License-Identifier: Apache-2.0
#include "hpsed/model.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/random.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hpsed {

ArchitectureConfig ArchitectureConfig::reduced() {
  ArchitectureConfig c;
  c.input_frames = 256;
  c.pyramid_branch_filters = 4;
  c.se_filters = {4, 8, 16, 32, 32, 32, 32};
  c.poolings = {{1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}};
  c.gru_units = 16;
  return c;
}

ArchitectureConfig ArchitectureConfig::half_width_short() {
  ArchitectureConfig c;
  c.input_frames = 64;
  c.pyramid_branch_filters = 8;
  c.se_filters = {8, 16, 32, 64, 64, 64, 64};
  c.gru_units = 32;
  return c;
}

int ArchitectureConfig::time_pool() const {
  return std::accumulate(poolings.begin(), poolings.end(), 1, [](int a, const auto& p) { return a * p.first; });
}

int ArchitectureConfig::freq_pool() const {
  return std::accumulate(poolings.begin(), poolings.end(), 1, [](int a, const auto& p) { return a * p.second; });
}

void ArchitectureConfig::validate() const {
  if (se_filters.empty() || se_filters.size() != poolings.size())
    throw InvalidInput("architecture: one pooling entry per gated layer is required");
  if (freq_pool() != n_mels) throw InvalidInput("architecture: frequency pooling must collapse the mel axis to 1");
  if (input_frames % time_pool()) throw InvalidInput("architecture: input frames not divisible by time pooling");
  for (int k : pyramid_kernels)
    if (k < 1 || k % 2 == 0) throw InvalidInput("architecture: pyramid kernels must be odd");
  if (se_kernel < 1 || se_kernel % 2 == 0) throw InvalidInput("architecture: gated kernel must be odd");
  if (pyramid_branch_filters < 1 || gru_units < 1 || gru_layers < 1 || classes < 1 || se_reduction < 1)
    throw InvalidInput("architecture: sizes must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw InvalidInput("architecture: dropout must be in [0, 1)");
}

template <typename S>
struct PseCrnn<S>::Index {
  std::array<int, 3> pyr_w{}, pyr_b{};
  struct Se {
    int conv_w = -1, conv_b = -1;  // linear and gate tensors are adjacent
    int gamma = -1, beta = -1;
    int fc1_w = -1, fc1_b = -1, fc2_w = -1, fc2_b = -1;
    int run_mean = -1, run_var = -1;
  };
  struct GruDir {
    int w_ih = -1, w_hh = -1, b_ih = -1, b_hh = -1;
  };
  std::vector<Se> se;
  std::vector<std::array<GruDir, 2>> gru;
  int strong_w = -1, strong_b = -1, att_w = -1, att_b = -1;
};

template <typename S>
PseCrnn<S>::PseCrnn(ArchitectureConfig config) : config_(std::move(config)), idx_(std::make_unique<Index>()) {
  config_.validate();
  const auto& c = config_;
  const int pb = c.pyramid_branch_filters;
  for (int b = 0; b < 3; ++b) {
    const int k = c.pyramid_kernels[static_cast<std::size_t>(b)];
    const std::string name = "pyramid.k" + std::to_string(k);
    idx_->pyr_w[static_cast<std::size_t>(b)] = params_.add(name + ".weight", {pb, 1, k, k});
    idx_->pyr_b[static_cast<std::size_t>(b)] = params_.add(name + ".bias", {pb});
  }
  int cin = c.pyramid_channels();
  for (std::size_t l = 0; l < c.se_filters.size(); ++l) {
    const int cout = c.se_filters[l];
    const int r = c.se_bottleneck(cout);
    const int k = c.se_kernel;
    const std::string name = "gated" + std::to_string(l + 1);
    typename Index::Se s;
    s.conv_w = params_.add(name + ".linear.weight", {cout, cin, k, k});
    params_.add(name + ".gate.weight", {cout, cin, k, k});
    s.conv_b = params_.add(name + ".linear.bias", {cout});
    params_.add(name + ".gate.bias", {cout});
    if (c.batch_norm) {
      s.gamma = params_.add(name + ".bn.gamma", {cout});
      s.beta = params_.add(name + ".bn.beta", {cout});
      s.run_mean = buffers_.add(name + ".bn.running_mean", {cout});
      s.run_var = buffers_.add(name + ".bn.running_var", {cout});
    }
    s.fc1_w = params_.add(name + ".se.fc1.weight", {r, cout});
    s.fc1_b = params_.add(name + ".se.fc1.bias", {r});
    s.fc2_w = params_.add(name + ".se.fc2.weight", {cout, r});
    s.fc2_b = params_.add(name + ".se.fc2.bias", {cout});
    idx_->se.push_back(s);
    cin = cout;
  }
  const int h = c.gru_units;
  for (int g = 0; g < c.gru_layers; ++g) {
    std::array<typename Index::GruDir, 2> dirs;
    for (int d = 0; d < 2; ++d) {
      const std::string name = "gru" + std::to_string(g + 1) + (d == 0 ? ".fwd" : ".bwd");
      dirs[static_cast<std::size_t>(d)].w_ih = params_.add(name + ".w_ih", {3 * h, cin});
      dirs[static_cast<std::size_t>(d)].w_hh = params_.add(name + ".w_hh", {3 * h, h});
      dirs[static_cast<std::size_t>(d)].b_ih = params_.add(name + ".b_ih", {3 * h});
      dirs[static_cast<std::size_t>(d)].b_hh = params_.add(name + ".b_hh", {3 * h});
    }
    idx_->gru.push_back(dirs);
    cin = 2 * h;
  }
  idx_->strong_w = params_.add("strong.weight", {c.classes, cin});
  idx_->strong_b = params_.add("strong.bias", {c.classes});
  idx_->att_w = params_.add("attention.weight", {c.classes, cin});
  idx_->att_b = params_.add("attention.bias", {c.classes});
}

template <typename S>
PseCrnn<S>::~PseCrnn() = default;
template <typename S>
PseCrnn<S>::PseCrnn(const PseCrnn& o)
    : config_(o.config_), params_(o.params_), buffers_(o.buffers_), idx_(std::make_unique<Index>(*o.idx_)) {}
template <typename S>
PseCrnn<S>& PseCrnn<S>::operator=(const PseCrnn& o) {
  if (this != &o) {
    config_ = o.config_;
    params_ = o.params_;
    buffers_ = o.buffers_;
    idx_ = std::make_unique<Index>(*o.idx_);
  }
  return *this;
}
template <typename S>
PseCrnn<S>::PseCrnn(PseCrnn&&) noexcept = default;
template <typename S>
PseCrnn<S>& PseCrnn<S>::operator=(PseCrnn&&) noexcept = default;

template <typename S>
ModelState<S> PseCrnn<S>::init(std::uint64_t seed) const {
  ModelState<S> st{ParamSet<S>(params_), ParamSet<S>(buffers_)};
  Rng rng = make_stream(seed, "init");
  const auto fill_uniform = [&](int slot, double fan_in) {
    const double bound = std::sqrt(3.0 / fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    auto v = st.params.vec(slot);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = static_cast<S>(u(rng));
  };
  const auto fill_orthogonal = [&](int slot, int h) {
    std::normal_distribution<double> normal;
    auto w = st.params.mat(slot);
    for (int gate = 0; gate < 3; ++gate) {
      Eigen::MatrixXd a(h, h);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      Eigen::MatrixXd q = qr.householderQ();
      const Eigen::VectorXd d = qr.matrixQR().diagonal();
      for (int j = 0; j < h; ++j)
        if (d(j) < 0) q.col(j) = -q.col(j);
      w.middleRows(gate * h, h) = q.cast<S>();
    }
  };

  for (std::size_t b = 0; b < 3; ++b) {
    const int k = config_.pyramid_kernels[b];
    fill_uniform(idx_->pyr_w[b], k * k);
  }
  for (const auto& s : idx_->se) {
    const auto& slot = params_.slot(s.conv_w);
    fill_uniform(s.conv_w, static_cast<double>(slot.cols()));
    fill_uniform(s.conv_w + 1, static_cast<double>(slot.cols()));
    if (s.gamma >= 0) {
      st.params.vec(s.gamma).setOnes();
      st.buffers.vec(s.run_var).setOnes();
    }
    fill_uniform(s.fc1_w, static_cast<double>(params_.slot(s.fc1_w).cols()));
    fill_uniform(s.fc2_w, static_cast<double>(params_.slot(s.fc2_w).cols()));
  }
  for (const auto& layer : idx_->gru) {
    for (const auto& d : layer) {
      fill_uniform(d.w_ih, static_cast<double>(params_.slot(d.w_ih).cols()));
      fill_orthogonal(d.w_hh, config_.gru_units);
    }
  }
  fill_uniform(idx_->strong_w, static_cast<double>(params_.slot(idx_->strong_w).cols()));
  fill_uniform(idx_->att_w, static_cast<double>(params_.slot(idx_->att_w).cols()));
  return st;
}

namespace {

template <typename S>
void check_finite(const std::vector<Matrix<S>>& maps, int layer) {
  for (const auto& m : maps)
    if (!m.allFinite()) throw NumericError("non-finite activation", layer);
}

}  // namespace

template <typename S>
BatchOutput<S> PseCrnn<S>::forward(const ModelState<S>& state, std::span<const Matrix<S>> inputs, Mode mode,
                                   ForwardCache<S>* cache, std::uint64_t dropout_seed) const {
  const auto& c = config_;
  const auto& p = state.params;
  if (!(p.layout == params_)) throw InvalidInput("forward: parameter layout does not match the architecture");
  const std::size_t n = inputs.size();
  const bool keep = cache != nullptr;
  int freq = c.n_mels, time = c.input_frames;
  for (const auto& x : inputs)
    if (x.rows() != freq || x.cols() != time)
      throw InvalidInput("forward: expected " + std::to_string(freq) + "x" + std::to_string(time) + " input, got " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  if (keep) {
    *cache = ForwardCache<S>{};
    cache->mode = mode;
    cache->input.resize(n);
    cache->se.resize(c.se_filters.size());
    cache->gru.resize(static_cast<std::size_t>(c.gru_layers));
  }

  // Pyramid: three same-padded convolutions concatenated on channels, run as
  // one convolution at the largest kernel size.
  std::vector<Matrix<S>> maps(n);
  {
    const auto [w, b] = pyramid_as_one(p);
    const int k = *std::max_element(c.pyramid_kernels.begin(), c.pyramid_kernels.end());
    Matrix<S> x;
    for (std::size_t i = 0; i < n; ++i) {
      x = Eigen::Map<const Matrix<S>>(inputs[i].data(), 1, static_cast<Eigen::Index>(freq) * time);
      nn::conv2d_forward<S>(x, freq, time, w, b, k, maps[i]);
      if (keep) cache->input[i] = std::move(x);
    }
  }
  check_finite(maps, 0);

  // Gated squeeze-excitation stack.
  for (std::size_t l = 0; l < idx_->se.size(); ++l) {
    const auto& s = idx_->se[l];
    const auto [tp, fp] = c.poolings[l];
    typename ForwardCache<S>::SeLayer local;
    auto& L = keep ? cache->se[l] : local;
    L.freq = freq;
    L.time = time;
    std::vector<Matrix<S>> g(n);
    if (keep) L.ab.resize(n);
    Matrix<S> ab;
    for (std::size_t i = 0; i < n; ++i) {
      nn::conv2d_forward<S>(maps[i], freq, time, p.stacked(s.conv_w), p.vec2(s.conv_b), c.se_kernel, ab);
      nn::glu_forward<S>(ab, g[i]);
      if (keep) L.ab[i] = std::move(ab);
    }
    if (keep) L.input = std::move(maps);
    maps.assign(n, Matrix<S>());
    if (c.batch_norm) {
      if (mode == Mode::Eval) {
        const Vector<S> rm = state.buffers.vec(s.run_mean), rv = state.buffers.vec(s.run_var);
        nn::batchnorm_forward<S>(g, p.vec(s.gamma), p.vec(s.beta), &rm, &rv, static_cast<S>(c.bn_eps), L.bn);
      } else {
        nn::batchnorm_forward<S>(g, p.vec(s.gamma), p.vec(s.beta), nullptr, nullptr, static_cast<S>(c.bn_eps), L.bn);
      }
      if (!keep) L.bn.xhat.clear();
    }
    if (keep) {
      L.se.resize(n);
      L.argmax.resize(n);
    }
    Matrix<S> y;
    nn::SeCache<S> se_cache;
    for (std::size_t i = 0; i < n; ++i) {
      nn::se_forward<S>(g[i], p.mat(s.fc1_w), p.vec(s.fc1_b), p.mat(s.fc2_w), p.vec(s.fc2_b), y, se_cache);
      nn::pool_forward<S>(y, freq, time, tp, fp, c.pooling, maps[i], keep ? &L.argmax[i] : nullptr);
      if (keep) L.se[i] = se_cache;
    }
    if (keep) L.se_input = std::move(g);
    freq /= fp;
    time /= tp;
    check_finite(maps, static_cast<int>(l) + 1);
  }

  // Frequency axis is 1 here: C x T' becomes a T' x C sequence.
  std::vector<Matrix<S>> seq(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = maps[i].transpose();
  maps.clear();

  const int first_gru_layer = static_cast<int>(idx_->se.size()) + 1;
  for (std::size_t g = 0; g < idx_->gru.size(); ++g) {
    const auto& dirs = idx_->gru[g];
    if (keep) {
      cache->gru[g].fwd.resize(n);
      cache->gru[g].bwd.resize(n);
    }
    nn::GruCache<S> fc, bc;
    for (std::size_t i = 0; i < n; ++i) {
      auto& f = keep ? cache->gru[g].fwd[i] : fc;
      auto& b = keep ? cache->gru[g].bwd[i] : bc;
      nn::gru_forward<S>(seq[i], p.mat(dirs[0].w_ih), p.mat(dirs[0].w_hh), p.vec(dirs[0].b_ih), p.vec(dirs[0].b_hh),
                         false, f);
      nn::gru_forward<S>(seq[i], p.mat(dirs[1].w_ih), p.mat(dirs[1].w_hh), p.vec(dirs[1].b_ih), p.vec(dirs[1].b_hh),
                         true, b);
      seq[i].resize(f.h.rows(), 2 * c.gru_units);
      seq[i] << f.h, b.h;
    }
    check_finite(seq, first_gru_layer + static_cast<int>(g));
  }

  if (mode == Mode::Train && c.dropout > 0.0) {
    if (keep) cache->dropout_mask.resize(n);
    const S scale = static_cast<S>(1.0 / (1.0 - c.dropout));
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = make_stream(dropout_seed, "dropout", i);
      std::bernoulli_distribution keep_unit(1.0 - c.dropout);
      Matrix<S> mask(seq[i].rows(), seq[i].cols());
      for (Eigen::Index j = 0; j < mask.size(); ++j) mask.data()[j] = keep_unit(rng) ? scale : S(0);
      seq[i] = seq[i].cwiseProduct(mask);
      if (keep) cache->dropout_mask[i] = std::move(mask);
    }
  }

  BatchOutput<S> out;
  out.strong.resize(n);
  out.weak.resize(n);
  if (keep) cache->heads.resize(n);
  nn::HeadCache<S> hc;
  for (std::size_t i = 0; i < n; ++i) {
    auto& h = keep ? cache->heads[i] : hc;
    nn::heads_forward<S>(seq[i], p.mat(idx_->strong_w), p.vec(idx_->strong_b), p.mat(idx_->att_w),
                         p.vec(idx_->att_b), out.weak[i], h);
    out.strong[i] = h.p;
  }
  check_finite(out.strong, first_gru_layer + c.gru_layers);
  if (keep) cache->head_input = std::move(seq);
  return out;
}

template <typename S>
void PseCrnn<S>::backward(const ModelState<S>& state, const ForwardCache<S>& cache,
                          std::span<const Matrix<S>> d_strong, std::span<const Vector<S>> d_weak,
                          ParamSet<S>& grads) const {
  const auto& c = config_;
  const auto& p = state.params;
  const std::size_t n = cache.input.size();
  if (!(grads.layout == params_)) throw InvalidInput("backward: gradient layout mismatch");
  if ((!d_strong.empty() && d_strong.size() != n) || (!d_weak.empty() && d_weak.size() != n))
    throw InvalidInput("backward: upstream gradient count does not match the batch");

  std::vector<Matrix<S>> dseq(n);
  for (std::size_t i = 0; i < n; ++i) {
    nn::heads_backward<S>(cache.head_input[i], cache.heads[i], p.mat(idx_->strong_w), p.mat(idx_->att_w),
                          d_strong.empty() ? nullptr : &d_strong[i], d_weak.empty() ? nullptr : &d_weak[i],
                          grads.mat(idx_->strong_w), grads.vec(idx_->strong_b), grads.mat(idx_->att_w),
                          grads.vec(idx_->att_b), dseq[i]);
    if (!cache.dropout_mask.empty()) dseq[i] = dseq[i].cwiseProduct(cache.dropout_mask[i]);
  }

  const int h = c.gru_units;
  for (std::size_t g = idx_->gru.size(); g-- > 0;) {
    const auto& dirs = idx_->gru[g];
    Matrix<S> dx_f, dx_b;
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix<S> dh_f = dseq[i].leftCols(h), dh_b = dseq[i].rightCols(h);
      nn::gru_backward<S>(cache.gru[g].fwd[i], p.mat(dirs[0].w_ih), p.mat(dirs[0].w_hh), dh_f,
                          grads.mat(dirs[0].w_ih), grads.mat(dirs[0].w_hh), grads.vec(dirs[0].b_ih),
                          grads.vec(dirs[0].b_hh), dx_f);
      nn::gru_backward<S>(cache.gru[g].bwd[i], p.mat(dirs[1].w_ih), p.mat(dirs[1].w_hh), dh_b,
                          grads.mat(dirs[1].w_ih), grads.mat(dirs[1].w_hh), grads.vec(dirs[1].b_ih),
                          grads.vec(dirs[1].b_hh), dx_b);
      dseq[i] = dx_f + dx_b;
    }
  }

  std::vector<Matrix<S>> dmaps(n);
  for (std::size_t i = 0; i < n; ++i) dmaps[i] = dseq[i].transpose();
  dseq.clear();

  for (std::size_t l = idx_->se.size(); l-- > 0;) {
    const auto& s = idx_->se[l];
    const auto& L = cache.se[l];
    const auto [tp, fp] = c.poolings[l];
    std::vector<Matrix<S>> dg(n);
    Matrix<S> dy;
    for (std::size_t i = 0; i < n; ++i) {
      nn::pool_backward<S>(dmaps[i], L.freq, L.time, tp, fp, c.pooling, &L.argmax[i], dy);
      nn::se_backward<S>(L.se_input[i], L.se[i], p.mat(s.fc1_w), p.mat(s.fc2_w), dy, grads.mat(s.fc1_w),
                         grads.vec(s.fc1_b), grads.mat(s.fc2_w), grads.vec(s.fc2_b), dg[i]);
    }
    if (c.batch_norm)
      nn::batchnorm_backward<S>(dg, L.bn, p.vec(s.gamma), cache.mode == Mode::Train, grads.vec(s.gamma),
                                grads.vec(s.beta));
    Matrix<S> dab;
    for (std::size_t i = 0; i < n; ++i) {
      nn::glu_backward<S>(L.ab[i], dg[i], dab);
      nn::conv2d_backward<S>(L.input[i], L.freq, L.time, p.stacked(s.conv_w), c.se_kernel, dab,
                             grads.stacked(s.conv_w), grads.vec2(s.conv_b), &dmaps[i]);
    }
  }

  const auto [w, b] = pyramid_as_one(p);
  const int k = *std::max_element(c.pyramid_kernels.begin(), c.pyramid_kernels.end());
  Matrix<S> dw = Matrix<S>::Zero(w.rows(), w.cols());
  Vector<S> db = Vector<S>::Zero(b.size());
  for (std::size_t i = 0; i < n; ++i)
    nn::conv2d_backward<S>(cache.input[i], c.n_mels, c.input_frames, w, k, dmaps[i], dw, db, nullptr);
  const int pb = c.pyramid_branch_filters;
  for (std::size_t br = 0; br < 3; ++br) {
    const int kb = c.pyramid_kernels[br], off = (k - kb) / 2;
    const auto rows = static_cast<Eigen::Index>(br) * pb;
    auto gw = grads.mat(idx_->pyr_w[br]);
    for (Eigen::Index o = 0; o < pb; ++o)
      for (int ky = 0; ky < kb; ++ky)
        for (int kx = 0; kx < kb; ++kx) gw(o, ky * kb + kx) += dw(rows + o, (ky + off) * k + kx + off);
    grads.vec(idx_->pyr_b[br]) += db.segment(rows, pb);
  }
}

template <typename S>
std::pair<Matrix<S>, Vector<S>> PseCrnn<S>::pyramid_as_one(const ParamSet<S>& p) const {
  const auto& c = config_;
  const int k = *std::max_element(c.pyramid_kernels.begin(), c.pyramid_kernels.end());
  const int pb = c.pyramid_branch_filters;
  Matrix<S> w = Matrix<S>::Zero(3 * pb, k * k);
  Vector<S> b(3 * pb);
  for (std::size_t br = 0; br < 3; ++br) {
    const int kb = c.pyramid_kernels[br], off = (k - kb) / 2;
    const auto rows = static_cast<Eigen::Index>(br) * pb;
    const auto src = p.mat(idx_->pyr_w[br]);
    for (Eigen::Index o = 0; o < pb; ++o)
      for (int ky = 0; ky < kb; ++ky)
        for (int kx = 0; kx < kb; ++kx) w(rows + o, (ky + off) * k + kx + off) = src(o, ky * kb + kx);
    b.segment(rows, pb) = p.vec(idx_->pyr_b[br]);
  }
  return {std::move(w), std::move(b)};
}

template <typename S>
void PseCrnn<S>::update_running_stats(ModelState<S>& state, const ForwardCache<S>& cache) const {
  if (!config_.batch_norm || cache.mode != Mode::Train || cache.input.empty()) return;
  const S m = static_cast<S>(config_.bn_momentum);
  for (std::size_t l = 0; l < idx_->se.size(); ++l) {
    const auto& s = idx_->se[l];
    auto rm = state.buffers.vec(s.run_mean);
    auto rv = state.buffers.vec(s.run_var);
    rm = (S(1) - m) * rm + m * cache.se[l].bn.mean;
    rv = (S(1) - m) * rv + m * cache.se[l].bn.var;
  }
}

Predictions predict(const PseCrnn<float>& model, const ModelState<float>& state, const Grid& spec) {
  const Matrix<float> input = spec;
  const auto out = model.forward(state, std::span<const Matrix<float>>(&input, 1), Mode::Eval);
  return {out.strong.front(), out.weak.front()};
}

Predictions ensemble_predict(const PseCrnn<float>& model, std::span<const ModelState<float>> states,
                             const Grid& spec) {
  if (states.empty()) throw InvalidInput("ensemble_predict: at least one model is required");
  Predictions sum = predict(model, states.front(), spec);
  for (std::size_t i = 1; i < states.size(); ++i) {
    const Predictions p = predict(model, states[i], spec);
    sum.strong += p.strong;
    sum.weak += p.weak;
  }
  const float inv = 1.0f / static_cast<float>(states.size());
  sum.strong *= inv;
  sum.weak *= inv;
  return sum;
}

template class PseCrnn<float>;
template class PseCrnn<double>;

}  // namespace hpsed
