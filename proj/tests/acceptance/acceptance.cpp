// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero when any selected criterion fails.
#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "hpsed/augment.hpp"
#include "hpsed/dataset.hpp"
#include "hpsed/labels.hpp"
#include "hpsed/losses.hpp"
#include "hpsed/metrics.hpp"
#include "hpsed/model.hpp"
#include "hpsed/objectives.hpp"
#include "hpsed/optimizer.hpp"
#include "hpsed/postprocess.hpp"
#include "hpsed/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#ifndef HPSED_CLI_PATH
#define HPSED_CLI_PATH "hpsed"
#endif

using namespace hpsed;
using namespace hpsed::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  const PseCrnn<double> model(ArchitectureConfig::half_width_short());
  ModelState<double> student = model.init(11);
  jitter_vectors(model, student, 12);
  ModelState<double> teacher = model.init(13);
  const int label_frames = model.config().output_frames();
  Rng rng = make_stream(14, "acceptance-grad");
  const Batch d = random_batch(rng, 1, 1, 2, 128, 64, label_frames);
  const Batch aug = augment_batch(shuffle_within_type(d, rng), AugmentationPolicy{}, rng);
  const auto in = cct_inputs(model, teacher, d, aug, 0.35);

  double worst = 0.0;
  std::string worst_at;
  std::size_t groups = 0;
  const std::pair<Term, const char*> terms[] = {{Term::Weak, "L_w"},
                                                {Term::Strong, "L_s"},
                                                {Term::ConsistencyWeak, "L_cw"},
                                                {Term::ConsistencyStrong, "L_cs"}};
  for (const auto& [term, name] : terms) {
    const auto checks = gradient_check(model, student, in, term, 2, 15, 1e-5);
    groups = checks.size();
    for (const auto& c : checks) {
      if (c.rel_error > worst) worst = c.rel_error, worst_at = std::string(name) + "/" + c.name;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 300.0, fmt("max relative error %.2e (%s) over 4 terms x %zu groups, %.0f s", worst,
                                            worst_at.c_str(), groups, secs)};
}

// 2 ---------------------------------------------------------------------------

Outcome shape_and_range() {
  const PseCrnn<float> model(ArchitectureConfig{});
  Rng rng = make_stream(21, "acceptance-shape");
  std::normal_distribution<float> level(-4.f, 2.f);
  int bad_shape = 0, bad_range = 0, bad_weak = 0;
  double worst_weak = 0.0;
  ModelState<float> state;
  for (int i = 0; i < 1000; ++i) {
    if (i % 100 == 0) {
      state = model.init(static_cast<std::uint64_t>(100 + i));
      jitter_vectors(model, state, static_cast<std::uint64_t>(200 + i), 0.5);
    }
    const float offset = level(rng);
    const Grid x = random_grid(rng, 128, 1024, offset - 6.f, offset + 6.f);
    const auto p = predict(model, state, x);
    if (p.strong.rows() != 256 || p.strong.cols() != 10 || p.weak.size() != 10) {
      ++bad_shape;
      continue;
    }
    if ((p.strong.array() < 0.f).any() || (p.strong.array() > 1.f).any() || (p.weak.array() < 0.f).any() ||
        (p.weak.array() > 1.f).any() || !p.strong.allFinite() || !p.weak.allFinite())
      ++bad_range;
    for (int c = 0; c < 10; ++c) {
      const double lo = p.strong.col(c).minCoeff(), hi = p.strong.col(c).maxCoeff(), w = p.weak(c);
      const double excess = std::max(lo - w, w - hi);
      worst_weak = std::max(worst_weak, excess);
      if (excess > 1e-6) ++bad_weak;
    }
  }
  return {bad_shape == 0 && bad_range == 0 && bad_weak == 0,
          fmt("1000 inputs: %d shape, %d range, %d weak-bound violations; worst weak excess %.1e", bad_shape,
              bad_range, bad_weak, std::max(0.0, worst_weak))};
}

// 3 ---------------------------------------------------------------------------

Outcome mix_endpoints() {
  const PseCrnn<double> model(tiny_architecture());
  Rng rng = make_stream(31, "acceptance-mix");
  double worst = 0.0;
  int nonzero = 0;
  auto aug_copy = [&](const Batch& b) {
    return augment_batch(shuffle_within_type(b, rng), AugmentationPolicy{}, rng);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const auto student = model.init(static_cast<std::uint64_t>(1000 + trial));
    const auto teacher = model.init(static_cast<std::uint64_t>(5000 + trial));
    const Batch d = tiny_batch(rng);
    const Batch a = aug_copy(d), b = aug_copy(d);
    const double w = 0.3 + 0.7 * (trial % 7) / 6.0;
    auto gap = [&](const LossBundle& x, const LossBundle& y) {
      for (double v : {x.total - y.total, x.l_w - y.l_w, x.l_s - y.l_s, x.l_cw - y.l_cw, x.l_cs - y.l_cs})
        worst = std::max(worst, std::fabs(v));
    };
    gap(cct_losses(model, student, teacher, d, a, 1.0, w), unmixed_losses(model, student, teacher, d, w));
    gap(cct_losses(model, student, teacher, d, a, 0.0, w), unmixed_losses(model, student, teacher, a, w));
    gap(m3_losses(model, student, teacher, d, a, b, 1.0, w),
        unmixed_losses(model, student, teacher, Batch{d.weak, d.strong, a.unlabeled}, w));
    gap(m3_losses(model, student, teacher, d, a, b, 0.0, w),
        unmixed_losses(model, student, teacher, Batch{a.weak, b.strong, b.unlabeled}, w));

    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lambda = u(rng);
    for (const auto& l : {cct_losses(model, student, student, d, d, lambda, w),
                          m3_losses(model, student, student, d, a, a, lambda, w)})
      if (l.l_cw != 0.0 || l.l_cs != 0.0) ++nonzero;
  }
  return {worst <= 1e-6 && nonzero == 0,
          fmt("100 batches: max endpoint gap %.2e; %d nonzero self-consistency losses", worst, nonzero)};
}

// 4 ---------------------------------------------------------------------------

Outcome ema_invariants() {
  ParamLayout layout;
  layout.add("a", {7});
  layout.add("b", {3, 5});
  Rng rng = make_stream(41, "acceptance-ema");
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  int failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    ParamSet<float> tf(layout), sf(layout);
    ParamSet<double> td(layout), sd(layout);
    for (Eigen::Index i = 0; i < tf.values.size(); ++i) {
      tf.values[i] = static_cast<float>(n(rng) * std::exp(mag(rng)));
      sf.values[i] = static_cast<float>(n(rng) * std::exp(mag(rng)));
      td.values[i] = n(rng) * std::exp(mag(rng));
      sd.values[i] = n(rng) * std::exp(mag(rng));
    }
    auto same = [](const auto& x, const auto& y) {
      return std::memcmp(x.values.data(), y.values.data(), sizeof(x.values[0]) * static_cast<std::size_t>(x.values.size())) == 0;
    };
    auto keep_f = tf;
    ema_update(keep_f, sf, 1.0);
    auto keep_d = td;
    ema_update(keep_d, sd, 1.0);
    if (!same(keep_f, tf) || !same(keep_d, td)) ++failures;
    auto copy_f = tf;
    ema_update(copy_f, sf, 0.0);
    auto copy_d = td;
    ema_update(copy_d, sd, 0.0);
    if (!same(copy_f, sf) || !same(copy_d, sd)) ++failures;

    // Dyadic scalars keep every midpoint exactly representable.
    std::uniform_int_distribution<int> k(-4096, 4096);
    ParamSet<float> hf(layout), gf(layout);
    ParamSet<double> hd(layout), gd(layout);
    for (Eigen::Index i = 0; i < hf.values.size(); ++i) {
      hf.values[i] = static_cast<float>(k(rng)) / 32.f;
      gf.values[i] = static_cast<float>(k(rng)) / 32.f;
      hd.values[i] = k(rng) / 1024.0;
      gd.values[i] = k(rng) / 1024.0;
    }
    const Vector<float> mid_f = (hf.values + gf.values) / 2.f;
    const Vector<double> mid_d = (hd.values + gd.values) / 2.0;
    ema_update(hf, gf, 0.5);
    ema_update(hd, gd, 0.5);
    if (hf.values != mid_f || hd.values != mid_d) ++failures;
  }
  return {failures == 0, fmt("200 fixtures per decay in {1, 0, 0.5}, float and double: %d failures", failures)};
}

// 5 ---------------------------------------------------------------------------

Outcome consistency_ramp() {
  Rng rng = make_stream(51, "acceptance-ramp");
  double worst_start = 0.0;
  int end_mismatch = 0, decreases = 0;
  const std::pair<double, long long> cases[] = {{1.0, 1000}, {0.5, 10000}, {3.0, 1}, {2.0, 37}, {1.0, 123457}};
  for (const auto& [w_max, ramp] : cases) {
    worst_start = std::max(worst_start, std::fabs(consistency_weight(0, w_max, ramp) - w_max * std::exp(-5.0)));
    if (consistency_weight(ramp, w_max, ramp) != w_max) ++end_mismatch;
    std::uniform_int_distribution<long long> pick(0, 2 * ramp + 10);
    std::vector<long long> steps(10000);
    for (auto& s : steps) s = pick(rng);
    std::sort(steps.begin(), steps.end());
    double prev = -1.0;
    for (long long s : steps) {
      const double w = consistency_weight(s, w_max, ramp);
      if (w < prev) ++decreases;
      prev = w;
    }
  }
  return {worst_start <= 1e-9 && end_mismatch == 0 && decreases == 0,
          fmt("5 schedules: |w(0) - w_max e^-5| <= %.1e, %d end mismatches, %d decreases over 10^4 steps each",
              worst_start, end_mismatch, decreases)};
}

// 6 ---------------------------------------------------------------------------

Outcome median_oracle() {
  Rng rng = make_stream(61, "acceptance-median");
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::uniform_int_distribution<int> levels(0, 4);
  int mismatches = 0;
  for (int window : {1, 3, 5, 7, 9, 11, 13}) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<float> x(256);
      // A third each: continuous, few-level (ties) and binary sequences.
      for (auto& v : x) {
        if (trial % 3 == 0) v = u(rng);
        else if (trial % 3 == 1) v = static_cast<float>(levels(rng)) / 4.f;
        else v = u(rng) < 0.4f ? 1.f : 0.f;
      }
      if (median_filter_1d(x, window) != naive_median(x, window)) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("7 windows x 1000 sequences of length 256: %d mismatches", mismatches)};
}

// 7 ---------------------------------------------------------------------------

Outcome metric_oracle() {
  Rng rng = make_stream(71, "acceptance-metric");
  int count_mismatches = 0;
  ClipEvents refs, ests;
  std::vector<std::pair<EventList, EventList>> pairs;
  std::uniform_real_distribution<double> jitter_scale(0.05, 0.6);
  for (int i = 0; i < 1000; ++i) {
    const EventList r = random_events(rng, 5);
    const EventList e = i % 4 == 3 ? random_events(rng, 5) : perturb_events(rng, r, jitter_scale(rng));
    if (match_events(r, e) != oracle_counts(r, e)) ++count_mismatches;
    const std::string id = "clip" + std::to_string(i);
    refs[id] = r;
    ests[id] = e;
    pairs.emplace_back(r, e);
  }
  const double f = macro_f_score(refs, ests).macro_f;
  const double f_oracle = oracle_macro_f(pairs);

  int fixture_failures = 0;
  auto expect = [&](const Event& r, const Event& e, bool want) {
    if ((match_events({r}, {e})[static_cast<std::size_t>(r.label)].tp == 1) != want) ++fixture_failures;
  };
  const Event ref{3, 2.0, 4.0};  // 2.0 s long: offset collar 0.4 s
  expect(ref, {3, 2.19, 4.0}, true);
  expect(ref, {3, 1.81, 4.0}, true);
  expect(ref, {3, 2.25, 4.0}, false);
  expect(ref, {3, 1.75, 4.0}, false);
  expect(ref, {3, 2.0, 4.39}, true);
  expect(ref, {3, 2.0, 3.61}, true);
  expect(ref, {3, 2.0, 4.45}, false);
  expect(ref, {3, 2.0, 3.55}, false);
  const Event short_ref{1, 5.0, 5.5};  // 0.5 s long: offset collar 0.2 s
  expect(short_ref, {1, 5.0, 5.69}, true);
  expect(short_ref, {1, 5.0, 5.75}, false);
  expect(short_ref, {1, 5.19, 5.5}, true);
  expect(short_ref, {1, 4.75, 5.5}, false);

  return {count_mismatches == 0 && std::fabs(f - f_oracle) < 1e-12 && fixture_failures == 0,
          fmt("1000 pairs: %d count mismatches, macro F %.6f vs oracle %.6f; %d collar fixture failures",
              count_mismatches, f, f_oracle, fixture_failures)};
}

// 8 ---------------------------------------------------------------------------

double training_set_f(const PseCrnn<float>& model, const ModelState<float>& state, const std::vector<Clip>& clips,
                      const ClipEvents& refs, int window) {
  ClipEvents est;
  DecodingConfig cfg;
  cfg.median_window = window;
  for (const auto& c : clips) est[c.id] = decode_events(predict(model, state, c.spec).strong, cfg);
  return macro_f_score(refs, est).macro_f;
}

Outcome overfit() {
  const auto t0 = Clock::now();
  const Dataset ds = synth_dataset(8, {0, 16, 0, 0}, FeatureConfig::reduced());
  TrainingConfig cfg;
  cfg.principle = Principle::MeanTeacher;
  cfg.w_max = 0.0;
  cfg.augment = false;
  cfg.weak_batch = 0;
  cfg.strong_batch = 8;
  cfg.unlabeled_batch = 0;
  cfg.steps = 2000;
  cfg.seed = 8;
  const Trainer trainer(ArchitectureConfig::reduced(), cfg, {nullptr, &ds.strong, nullptr});
  TrainingState state = trainer.initial_state();
  double f = 0.0;
  while (state.step < cfg.steps && seconds_since(t0) < 600.0) {
    trainer.step(state);
    if (state.step % 50 == 0) {
      f = training_set_f(trainer.model(), state.student, ds.strong, ds.strong_events, DecodingConfig{}.median_window);
      if (f >= 0.95) break;
    }
  }
  const double secs = seconds_since(t0);
  return {f >= 0.95 && state.step <= 2000 && secs < 600.0,
          fmt("training-set macro F %.3f after %lld steps, %.0f s", f, state.step, secs)};
}

// 9 ---------------------------------------------------------------------------

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome semi_supervised(long long steps) {
  const auto t0 = Clock::now();
  const Dataset ds = synth_dataset(1000, {50, 50, 400, 100}, FeatureConfig::reduced());
  const std::vector<int> windows{7, 9, 11, 13};
  struct Method {
    const char* name;
    Principle principle;
    double w_max;
  };
  const Method methods[] = {
      {"mean-teacher", Principle::MeanTeacher, 0.0}, {"cct", Principle::Cct, 1.0}, {"m3", Principle::M3, 1.0}};
  std::map<std::string, std::map<int, std::vector<double>>> scores;
  for (const auto& m : methods) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TrainingConfig cfg;
      cfg.principle = m.principle;
      cfg.w_max = m.w_max;
      cfg.steps = steps;
      cfg.ramp_steps = steps / 2;
      cfg.seed = seed;
      const Trainer trainer(ArchitectureConfig::reduced(), cfg, {&ds.weak, &ds.strong, &ds.unlabeled});
      TrainingState state = trainer.initial_state();
      trainer.run(state);
      std::cout << "  " << m.name << " seed " << seed;
      for (int w : windows) {
        const double f = training_set_f(trainer.model(), state.teacher, ds.validation, ds.validation_events, w);
        scores[m.name][w].push_back(f);
        std::cout << fmt("  w%d %.3f", w, f);
      }
      std::cout << fmt("  (%.0f s)\n", seconds_since(t0)) << std::flush;
    }
  }
  std::map<std::string, double> best;
  for (const auto& m : methods) {
    std::cout << "  median " << m.name;
    double b = 0.0;
    for (int w : windows) {
      const double med = median_of(scores[m.name][w]);
      b = std::max(b, med);
      std::cout << fmt("  w%d %.3f", w, med);
    }
    best[m.name] = b;
    std::cout << "\n";
  }
  const double secs = seconds_since(t0);
  const bool ok = best["m3"] >= best["mean-teacher"] && best["cct"] >= best["mean-teacher"] && secs < 7200.0;
  return {ok, fmt("best-window median F: m3 %.3f, cct %.3f, mean-teacher %.3f; %lld steps, %.0f s", best["m3"],
                  best["cct"], best["mean-teacher"], steps, secs)};
}

// 10 --------------------------------------------------------------------------

/// Events that stay separate after rasterisation: same-class events are at
/// least three frames apart.
EventList separated_events(Rng& rng) {
  EventList out;
  std::uniform_int_distribution<int> count(0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double gap = 3.0 * kFrameDuration;
  for (int c = 0; c < kNumClasses; ++c) {
    const int n = count(rng);
    std::vector<double> cuts;
    for (int k = 0; k < 2 * n; ++k) cuts.push_back(u(rng) * (kClipSeconds - 2 * n * gap));
    std::sort(cuts.begin(), cuts.end());
    for (int k = 0; k < n; ++k) {
      const double on = cuts[2 * k] + 2 * k * gap, off = cuts[2 * k + 1] + (2 * k + 1) * gap;
      out.push_back({c, on, std::min(off, kClipSeconds)});
    }
  }
  return out;
}

Outcome round_trip() {
  Rng rng = make_stream(101, "acceptance-roundtrip");
  DecodingConfig cfg;
  cfg.median_window = 1;
  cfg.threshold = 0.5;
  int not_fixed = 0, count_mismatch = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const EventList ev = trial % 2 ? separated_events(rng) : random_events(rng, 4, 0.001);
    const StrongLabelGrid g = rasterize_events(ev);
    const EventList dec = decode_events(g, cfg);
    if (rasterize_events(dec) != g) ++not_fixed;
    if (trial % 2 == 0) continue;
    EventList sorted = ev;
    std::sort(sorted.begin(), sorted.end(),
              [](const Event& a, const Event& b) { return std::tie(a.label, a.onset) < std::tie(b.label, b.onset); });
    if (sorted.size() != dec.size()) {
      ++count_mismatch;
      continue;
    }
    for (std::size_t i = 0; i < dec.size(); ++i) {
      if (dec[i].label != sorted[i].label) ++count_mismatch;
      worst = std::max({worst, std::fabs(dec[i].onset - sorted[i].onset), std::fabs(dec[i].offset - sorted[i].offset)});
    }
  }
  return {not_fixed == 0 && count_mismatch == 0 && worst <= kFrameDuration + 1e-12,
          fmt("500 lists: %d not fixed points, %d event-count mismatches, worst boundary shift %.4f s (frame %.4f s)",
              not_fixed, count_mismatch, worst, kFrameDuration)};
}

// 11 --------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + HPSED_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / fs::path("hpsed-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string q = "\"", data = (root / "data").string();
  std::string failures;
  if (run("synth --seed 5 --weak 8 --strong 8 --unlabeled 16 --val 2 --out " + q + data + q) != 0)
    return {false, "synth failed"};
  const std::string flags = " --data " + q + data + q + " --reduced --principle cct --steps 12 --ramp-steps 6 --seed 4";
  auto dir = [&](const char* n) { return q + (root / n).string() + q; };
  if (run("train" + flags + " --out " + dir("a")) != 0) failures += " run-a";
  if (run("train" + flags + " --out " + dir("b")) != 0) failures += " run-b";
  if (run("train" + flags + " --stop-after 5 --out " + dir("c")) != 0) failures += " run-c";
  if (run("train" + flags + " --resume " + q + (root / "c" / "model.ckpt").string() + q + " --out " + dir("c")) != 0)
    failures += " resume-c";
  const std::string a = slurp(root / "a" / "loss.jsonl"), b = slurp(root / "b" / "loss.jsonl"),
                    c = slurp(root / "c" / "loss.jsonl");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  const bool repeat = !a.empty() && a == b && slurp(root / "a" / "model.ckpt") == slurp(root / "b" / "model.ckpt");
  const bool resume = !a.empty() && a == c && slurp(root / "a" / "model.ckpt") == slurp(root / "c" / "model.ckpt");
  fs::remove_all(root);
  return {failures.empty() && repeat && resume && lines == 12,
          fmt("%ld logged steps; repeat run %s, resumed run %s%s%s", static_cast<long>(lines),
              repeat ? "identical" : "differs", resume ? "identical" : "differs", failures.empty() ? "" : "; failed:",
              failures.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  long long semi_steps = 350;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 11));
  app.add_option("--semi-steps", semi_steps, "Training steps per run for criterion 9")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (int i = 1; i <= 11; ++i) selected.push_back(i);

  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"gradient correctness", gradient_correctness}},
      {2, {"shape/range contract", shape_and_range}},
      {3, {"mix endpoints", mix_endpoints}},
      {4, {"EMA invariants", ema_invariants}},
      {5, {"consistency ramp", consistency_ramp}},
      {6, {"median filter oracle", median_oracle}},
      {7, {"metric oracle", metric_oracle}},
      {8, {"overfit check", overfit}},
      {9, {"semi-supervised benefit", [&] { return semi_supervised(semi_steps); }}},
      {10, {"raster round-trip", round_trip}},
      {11, {"determinism and resume", determinism}},
  };
  int failed = 0;
  for (int n : selected) {
    const auto& [name, fn] = criteria.at(n);
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << n << " (" << name << "): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
