// SPDX-License-Identifier: Apache-2.0
#include "hpsed/synth.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/labels.hpp"
#include "hpsed/manifest.hpp"
#include "hpsed/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace hpsed {

const std::array<SynthClassSpec, kNumClasses>& synth_classes() {
  using K = GeneratorKind;
  static const std::array<SynthClassSpec, kNumClasses> specs{{
      {0, K::Tone, 0.3, 2.0, 250.0, 350.0},
      {1, K::Tone, 0.3, 2.0, 1800.0, 2200.0},
      {2, K::Chirp, 0.5, 1.5, 500.0, 1000.0},
      {3, K::Chirp, 0.5, 1.5, 3500.0, 2500.0},
      {4, K::NoiseBurst, 0.2, 1.5, 5000.0, 7000.0},
      {5, K::NoiseBurst, 0.2, 1.5, 11000.0, 14000.0},
      {6, K::HarmonicStack, 0.5, 3.0, 100.0, 130.0},
      {7, K::HarmonicStack, 0.5, 3.0, 700.0, 850.0},
      {8, K::Tone, 0.3, 2.0, 8500.0, 9500.0},
      {9, K::NoiseBurst, 0.2, 1.5, 16000.0, 19000.0},
  }};
  return specs;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double millis(double t) { return std::round(t * 1000.0) / 1000.0; }

// Kellet's economy pink filter over white noise, scaled to the given RMS.
std::vector<float> pink_noise(Rng& rng, std::size_t n, double rms) {
  std::normal_distribution<double> white(0.0, 1.0);
  std::vector<double> y(n);
  double b0 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = white(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    y[i] = b0 + b1 + b2 + w * 0.1848;
  }
  double ss = 0.0;
  for (double v : y) ss += v * v;
  const double scale = rms / std::sqrt(ss / static_cast<double>(n) + 1e-30);
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(y[i] * scale);
  return out;
}

void add_event(std::vector<float>& audio, const Event& e, Rng& rng) {
  const auto& spec = synth_classes()[static_cast<std::size_t>(e.label)];
  const auto begin = static_cast<std::size_t>(std::lround(e.onset * kSampleRate));
  const auto end = std::min(audio.size(), static_cast<std::size_t>(std::lround(e.offset * kSampleRate)));
  if (end <= begin) return;
  const std::size_t len = end - begin;
  const double amp = uniform(rng, 0.1, 0.3);
  const double fade = std::min(0.01 * kSampleRate, static_cast<double>(len) / 4.0);

  // Component sinusoids: (start freq, end freq, amplitude, phase).
  struct Partial {
    double f0, f1, a, phase;
  };
  std::vector<Partial> partials;
  switch (spec.kind) {
    case GeneratorKind::Tone: {
      const double f = uniform(rng, spec.f_low, spec.f_high);
      partials.push_back({f, f, 1.0, uniform(rng, 0.0, kTwoPi)});
      break;
    }
    case GeneratorKind::Chirp: {
      const double jitter = uniform(rng, 0.95, 1.05);
      partials.push_back({spec.f_low * jitter, spec.f_high * jitter, 1.0, uniform(rng, 0.0, kTwoPi)});
      break;
    }
    case GeneratorKind::NoiseBurst: {
      const int n = 40;
      const double a = 1.0 / std::sqrt(static_cast<double>(n));
      for (int i = 0; i < n; ++i) {
        const double f = uniform(rng, spec.f_low, spec.f_high);
        partials.push_back({f, f, a, uniform(rng, 0.0, kTwoPi)});
      }
      break;
    }
    case GeneratorKind::HarmonicStack: {
      const double f0 = uniform(rng, spec.f_low, spec.f_high);
      const int harmonics = static_cast<int>(std::min(8.0, 4000.0 / f0));
      for (int h = 1; h <= harmonics; ++h)
        partials.push_back({f0 * h, f0 * h, 1.0 / h, uniform(rng, 0.0, kTwoPi)});
      break;
    }
  }
  double norm = 0.0;
  for (const auto& p : partials) norm += p.a * p.a;
  const double gain = amp * std::sqrt(2.0 / norm);

  const double dur = static_cast<double>(len) / kSampleRate;
  for (const auto& p : partials) {
    const double slope = (p.f1 - p.f0) / dur;
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / kSampleRate;
      const double phase = p.phase + kTwoPi * (p.f0 * t + 0.5 * slope * t * t);
      double env = 1.0;
      const double di = static_cast<double>(i), dr = static_cast<double>(len - 1 - i);
      if (di < fade) env = di / fade;
      if (dr < fade) env = std::min(env, dr / fade);
      audio[begin + i] += static_cast<float>(gain * p.a * env * std::sin(phase));
    }
  }
}

}  // namespace

std::vector<ClipPlan> plan_pool(std::uint64_t seed, std::string_view pool, int count) {
  if (count < 0) throw InvalidInput("clip count must be nonnegative");
  std::vector<ClipPlan> plans;
  plans.reserve(static_cast<std::size_t>(count));
  std::array<int, kNumClasses> used{};
  for (int i = 0; i < count; ++i) {
    ClipPlan plan;
    char name[64];
    std::snprintf(name, sizeof name, "%.*s_%04d.wav", static_cast<int>(pool.size()), pool.data(), i);
    plan.id = name;
    plan.seed = derive_seed(seed, pool, static_cast<std::uint64_t>(i));
    Rng rng = make_stream(plan.seed, "plan");
    const int n_events = std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<int> chosen;
    for (int k = 0; k < n_events; ++k) {
      int best = -1;
      std::vector<int> ties;
      for (int c = 0; c < kNumClasses; ++c) {
        if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
        const int u = used[static_cast<std::size_t>(c)];
        if (best < 0 || u < best) {
          best = u;
          ties.clear();
        }
        if (u == best) ties.push_back(c);
      }
      const int c = ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
      chosen.push_back(c);
      ++used[static_cast<std::size_t>(c)];
      const auto& spec = synth_classes()[static_cast<std::size_t>(c)];
      const double dur = millis(uniform(rng, spec.min_duration, spec.max_duration));
      const double onset = millis(uniform(rng, 0.0, kClipSeconds - dur));
      plan.events.push_back({c, onset, std::min(kClipSeconds, millis(onset + dur))});
    }
    std::sort(plan.events.begin(), plan.events.end(),
              [](const Event& a, const Event& b) { return a.onset != b.onset ? a.onset < b.onset : a.label < b.label; });
    plans.push_back(std::move(plan));
  }
  return plans;
}

Waveform render_clip(const ClipPlan& plan) {
  Rng bg = make_stream(plan.seed, "background");
  Waveform w;
  w.samples = pink_noise(bg, kClipSamples, 0.02);
  for (std::size_t k = 0; k < plan.events.size(); ++k) {
    Rng rng = make_stream(plan.seed, "event", k);
    add_event(w.samples, plan.events[k], rng);
  }
  // Overlapping loud events can exceed full scale; keep 16-bit output unclipped.
  float peak = 0.f;
  for (float v : w.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0.99f)
    for (auto& v : w.samples) v *= 0.99f / peak;
  return w;
}

void generate_dataset(const std::filesystem::path& out, std::uint64_t seed, const DatasetCounts& counts) {
  if (counts.weak < 0 || counts.strong < 0 || counts.unlabeled < 0 || counts.validation < 0)
    throw InvalidInput("clip counts must be nonnegative");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());

  auto render_pool = [&](const std::string& pool, int n) {
    const auto dir = out / "audio" / pool;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    auto plans = plan_pool(seed, pool, n);
    for (const auto& p : plans) write_wav(dir / p.id, render_clip(p));
    return plans;
  };

  WeakManifest weak;
  for (const auto& p : render_pool("weak", counts.weak)) weak[p.id] = weak_from_events(p.events);
  write_weak_manifest(out / "weak.tsv", weak);

  for (const auto& [pool, n] : {std::pair<std::string, int>{"strong", counts.strong}, {"validation", counts.validation}}) {
    ClipEvents events;
    for (const auto& p : render_pool(pool, n)) events[p.id] = p.events;
    write_strong_manifest(out / (pool + ".tsv"), events);
  }

  std::vector<std::string> names;
  for (const auto& p : render_pool("unlabeled", counts.unlabeled)) names.push_back(p.id);
  write_clip_list(out / "unlabeled.tsv", names);
}

}  // namespace hpsed
