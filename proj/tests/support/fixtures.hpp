// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/metrics.hpp"
#include "hpsed/model.hpp"
#include "hpsed/objectives.hpp"
#include "hpsed/random.hpp"
#include "hpsed/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hpsed::testing {

inline Grid random_grid(Rng& rng, Eigen::Index rows, Eigen::Index cols, float lo = -1.f, float hi = 1.f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Grid g(rows, cols);
  for (auto& v : g.reshaped()) v = u(rng);
  return g;
}

inline WeakLabel random_weak(Rng& rng) {
  WeakLabel w = WeakLabel::Zero(kNumClasses);
  std::bernoulli_distribution b(0.3);
  for (int c = 0; c < kNumClasses; ++c) w(c) = b(rng) ? 1.f : 0.f;
  if (w.sum() == 0.f) w(std::uniform_int_distribution<int>(0, kNumClasses - 1)(rng)) = 1.f;
  return w;
}

inline StrongLabelGrid random_strong(Rng& rng, int frames = kLabelFrames) {
  StrongLabelGrid g = StrongLabelGrid::Zero(frames, kNumClasses);
  std::uniform_int_distribution<int> start(0, frames - 1), len(1, frames / 4);
  for (int c = 0; c < kNumClasses; ++c) {
    if (std::bernoulli_distribution(0.3)(rng)) {
      const int s = start(rng);
      g.col(c).segment(s, std::min(frames - s, len(rng))).setOnes();
    }
  }
  return g;
}

/// A batch with `w` weak, `s` strong and `u` unlabeled random clips.
inline Batch random_batch(Rng& rng, int w, int s, int u, int bands, int frames, int label_frames) {
  Batch b;
  auto spec = [&] { return random_grid(rng, bands, frames, -8.f, 2.f); };
  int id = 0;
  for (int i = 0; i < w; ++i) b.weak.push_back({"w" + std::to_string(id++), spec(), random_weak(rng), std::nullopt});
  for (int i = 0; i < s; ++i) {
    auto g = random_strong(rng, label_frames);
    WeakLabel wl = g.colwise().maxCoeff().transpose();
    b.strong.push_back({"s" + std::to_string(id++), spec(), wl, g});
  }
  for (int i = 0; i < u; ++i) b.unlabeled.push_back({"u" + std::to_string(id++), spec(), std::nullopt, std::nullopt});
  return b;
}

/// Random well-formed events on a 10 s clip, at most `per_class` per class.
inline EventList random_events(Rng& rng, int per_class, double min_len = 0.05) {
  EventList out;
  std::uniform_int_distribution<int> count(0, per_class);
  std::uniform_real_distribution<double> t(0.0, kClipSeconds);
  for (int c = 0; c < kNumClasses; ++c) {
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
      double a = t(rng), b = t(rng);
      if (a > b) std::swap(a, b);
      if (b - a < min_len) b = std::min(kClipSeconds, a + min_len);
      if (b - a < min_len) a = b - min_len;
      out.push_back({c, a, b});
    }
  }
  return out;
}

/// Small random perturbation of an event list: each event's times jitter by
/// up to `jitter` seconds, some events are dropped and some are added.
inline EventList perturb_events(Rng& rng, const EventList& ref, double jitter) {
  EventList out;
  std::uniform_real_distribution<double> j(-jitter, jitter);
  std::bernoulli_distribution drop(0.2);
  for (const auto& e : ref) {
    if (drop(rng)) continue;
    double on = std::clamp(e.onset + j(rng), 0.0, kClipSeconds - 0.01);
    double off = std::clamp(e.offset + j(rng), on + 0.01, kClipSeconds);
    out.push_back({e.label, on, off});
  }
  for (const auto& e : random_events(rng, 1)) out.push_back(e);
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

/// Sort-based median with half-sample symmetric padding.
inline std::vector<float> naive_median(const std::vector<float>& x, int window) {
  const int n = static_cast<int>(x.size()), h = window / 2;
  std::vector<float> padded;
  for (int i = h; i >= 1; --i) padded.push_back(x[static_cast<std::size_t>(std::min(i - 1, n - 1))]);
  padded.insert(padded.end(), x.begin(), x.end());
  for (int i = 0; i < h; ++i) padded.push_back(x[static_cast<std::size_t>(std::max(0, n - 1 - i))]);
  std::vector<float> out;
  for (int t = 0; t < n; ++t) {
    std::vector<float> w(padded.begin() + t, padded.begin() + t + window);
    std::sort(w.begin(), w.end());
    out.push_back(w[static_cast<std::size_t>(h)]);
  }
  return out;
}

/// Independent greedy matcher: references by (onset, offset); each takes the
/// unmatched estimate with the smallest (onset, offset, position) among those
/// inside its collars.
inline CountsPerClass oracle_counts(const EventList& ref, const EventList& est) {
  CountsPerClass out{};
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<Event> r, e;
    std::vector<std::size_t> epos;
    for (const auto& x : ref)
      if (x.label == c) r.push_back(x);
    for (std::size_t i = 0; i < est.size(); ++i)
      if (est[i].label == c) e.push_back(est[i]), epos.push_back(i);
    std::stable_sort(r.begin(), r.end(), [](const Event& a, const Event& b) {
      return std::tie(a.onset, a.offset) < std::tie(b.onset, b.offset);
    });
    std::vector<char> taken(e.size(), 0);
    long tp = 0;
    for (const auto& x : r) {
      const double off_collar = std::max(0.2, 0.2 * (x.offset - x.onset));
      long best = -1;
      for (std::size_t k = 0; k < e.size(); ++k) {
        if (taken[k]) continue;
        if (std::fabs(e[k].onset - x.onset) > 0.2 + 1e-9) continue;
        if (std::fabs(e[k].offset - x.offset) > off_collar + 1e-9) continue;
        if (best < 0 || std::tie(e[k].onset, e[k].offset, epos[k]) <
                            std::tie(e[static_cast<std::size_t>(best)].onset, e[static_cast<std::size_t>(best)].offset,
                                     epos[static_cast<std::size_t>(best)]))
          best = static_cast<long>(k);
      }
      if (best >= 0) {
        taken[static_cast<std::size_t>(best)] = 1;
        ++tp;
      }
    }
    out[static_cast<std::size_t>(c)] = {tp, static_cast<long>(e.size()) - tp, static_cast<long>(r.size()) - tp};
  }
  return out;
}

/// Macro F from pooled oracle counts, skipping absent classes.
inline double oracle_macro_f(const std::vector<std::pair<EventList, EventList>>& clips) {
  CountsPerClass total{};
  for (const auto& [r, e] : clips) {
    const auto c = oracle_counts(r, e);
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += c[k];
  }
  double sum = 0.0;
  int n = 0;
  for (const auto& k : total) {
    if (k.tp + k.fp + k.fn == 0) continue;
    sum += 2.0 * static_cast<double>(k.tp) / static_cast<double>(2 * k.tp + k.fp + k.fn);
    ++n;
  }
  return n ? sum / n : 0.0;
}

/// Moves every 1-D tensor away from its initial value so no ReLU sits on its
/// kink at the evaluation point.
template <typename S>
void jitter_vectors(const PseCrnn<S>& model, ModelState<S>& state, std::uint64_t seed, double scale = 0.2) {
  Rng rng = make_stream(seed, "jitter");
  std::normal_distribution<double> n(0.0, scale);
  for (const auto& slot : model.param_layout().slots())
    if (slot.shape.size() == 1)
      for (Eigen::Index i = 0; i < slot.size; ++i) state.params.values[slot.offset + i] += static_cast<S>(n(rng));
}

}  // namespace hpsed::testing

namespace hpsed::testing {

/// Smallest useful network: 128 x 32 input, one output frame per input frame.
inline ArchitectureConfig tiny_architecture() {
  ArchitectureConfig c = ArchitectureConfig::reduced();
  c.input_frames = 32;
  c.pyramid_branch_filters = 2;
  c.se_filters = {2, 4, 4, 4, 4, 4, 4};
  c.gru_units = 4;
  return c;
}

inline constexpr int kTinyFrames = 32;

inline Batch tiny_batch(Rng& rng, int w = 2, int s = 2, int u = 3) {
  return random_batch(rng, w, s, u, 128, kTinyFrames, kTinyFrames);
}

}  // namespace hpsed::testing
