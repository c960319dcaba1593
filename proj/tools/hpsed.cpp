// SPDX-License-Identifier: Apache-2.0
// hpsed: synthesis, training, decoding and scoring from the command line.

#include "hpsed/checkpoint.hpp"
#include "hpsed/config.hpp"
#include "hpsed/dataset.hpp"
#include "hpsed/errors.hpp"
#include "hpsed/manifest.hpp"
#include "hpsed/metrics.hpp"
#include "hpsed/model.hpp"
#include "hpsed/postprocess.hpp"
#include "hpsed/synth.hpp"
#include "hpsed/trainer.hpp"
#include "hpsed/wav.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef HPSED_VERSION
#define HPSED_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace hpsed {
namespace {

constexpr const char* kCheckpointName = "model.ckpt";
constexpr const char* kLossLogName = "loss.jsonl";

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

void write_run_manifest(const fs::path& dir, const std::string& command, const std::string& argv_text,
                        json config) {
  fs::create_directories(dir);
  json m;
  m["command"] = command;
  m["argv"] = argv_text;
  m["version"] = HPSED_VERSION;
  m["config"] = std::move(config);
  std::ofstream out(dir / "run.json");
  if (!out) throw IoError("cannot write " + (dir / "run.json").string());
  out << m.dump(2) << '\n';
}

std::vector<int> parse_windows(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int w = 0;
    try {
      w = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw InvalidInput("bad window list: " + text);
    out.push_back(w);
  }
  if (out.empty()) throw InvalidInput("empty window list");
  return out;
}

ClipEvents read_events_arg(const std::string& where) {
  if (where == "-") return read_strong_manifest(std::cin);
  return load_strong_manifest(where);
}

struct Model {
  PseCrnn<float> net;
  ModelState<float> state;
  FeatureConfig features;
  Checkpoint meta;
};

Model load_model(const fs::path& path, bool use_student) {
  if (!fs::exists(path)) throw IoError("checkpoint not found: " + path.string());
  Checkpoint ck = load_checkpoint(path);
  PseCrnn<float> net(ck.architecture);
  ModelState<float> state = use_student ? ck.state.student : ck.state.teacher;
  FeatureConfig features = ck.features;
  return {std::move(net), std::move(state), features, std::move(ck)};
}

void require_same_front_end(const std::vector<Model>& models) {
  for (const auto& m : models)
    if (!(m.features == models.front().features) || !(m.meta.architecture == models.front().meta.architecture))
      throw InvalidInput("ensemble members must share architecture and features");
}

std::vector<Predictions> predict_all(const std::vector<Model>& models, const std::vector<Clip>& clips) {
  std::vector<ModelState<float>> states;
  for (const auto& m : models) states.push_back(m.state);
  std::vector<Predictions> out;
  out.reserve(clips.size());
  for (const auto& c : clips) out.push_back(ensemble_predict(models.front().net, states, c.spec));
  return out;
}

ClipEvents decode_all(const std::vector<Clip>& clips, const std::vector<Predictions>& preds, DecodingConfig cfg,
                      int window) {
  cfg.median_window = window;
  cfg.validate();
  ClipEvents est;
  for (std::size_t i = 0; i < clips.size(); ++i) est[clips[i].id] = decode_events(preds[i].strong, cfg, &preds[i].weak);
  return est;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

void print_sweep(std::ostream& out, const std::vector<std::string>& labels,
                 const std::vector<std::vector<double>>& rows, const std::vector<int>& windows) {
  std::size_t width = 6;
  for (const auto& l : labels) width = std::max(width, l.size());
  out << std::left << std::setw(static_cast<int>(width)) << "window";
  for (int w : windows) out << "  " << std::right << std::setw(6) << w;
  out << '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << std::left << std::setw(static_cast<int>(width)) << labels[r];
    for (double v : rows[r]) out << "  " << std::right << std::setw(6) << fmt(v);
    out << '\n';
  }
}

struct DecodeFlags {
  double threshold = 0.5;
  std::optional<double> weak_gate;

  void add(CLI::App* app) {
    app->add_option("--threshold", threshold, "Binarisation threshold")->capture_default_str();
    app->add_option("--weak-gate", weak_gate, "Drop classes whose clip-level probability is below this");
  }
  DecodingConfig config() const {
    DecodingConfig c;
    c.threshold = threshold;
    c.weak_gate = weak_gate;
    return c;
  }
};

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::uint64_t seed = 1;
  DatasetCounts counts;
  std::string out;
};

int run_synth(const SynthArgs& a, const std::string& argv_text) {
  generate_dataset(a.out, a.seed, a.counts);
  json cfg = {{"seed", a.seed},
              {"weak", a.counts.weak},
              {"strong", a.counts.strong},
              {"unlabeled", a.counts.unlabeled},
              {"validation", a.counts.validation}};
  write_run_manifest(a.out, "synth", argv_text, cfg);
  std::cerr << "wrote " << a.counts.weak + a.counts.strong + a.counts.unlabeled + a.counts.validation << " clips to "
            << a.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string data, out, config, cache, resume;
  std::string principle;
  std::optional<double> w_max, ema_decay, learning_rate, alpha;
  std::optional<long long> steps, ramp_steps;
  std::optional<std::uint64_t> seed;
  bool reduced = false;
  bool no_augment = false;
  long long checkpoint_every = 0;
  long long stop_after = -1;
};

RunConfig resolve(const TrainArgs& a) {
  RunConfig rc;
  if (a.reduced) {
    rc.architecture = ArchitectureConfig::reduced();
    rc.features = FeatureConfig::reduced();
  }
  if (!a.config.empty()) rc = load_run_config(a.config, rc);
  auto& t = rc.training;
  if (!a.principle.empty()) t.principle = parse_principle(a.principle);
  if (a.w_max) t.w_max = *a.w_max;
  if (a.ema_decay) t.ema_decay = *a.ema_decay;
  if (a.learning_rate) t.learning_rate = *a.learning_rate;
  if (a.alpha) t.alpha = *a.alpha;
  if (a.steps) t.steps = *a.steps;
  if (a.ramp_steps) t.ramp_steps = *a.ramp_steps;
  if (a.seed) t.seed = *a.seed;
  if (a.no_augment) t.augment = false;
  rc.architecture.validate();
  t.validate();
  return rc;
}

int run_train(const TrainArgs& a, const std::string& argv_text) {
  const RunConfig rc = resolve(a);
  const fs::path out = a.out;
  fs::create_directories(out);

  std::optional<fs::path> cache;
  if (!a.cache.empty()) cache = a.cache;
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = load_dataset(a.data, rc.features, cache);
  std::cerr << "loaded " << ds.weak.size() << " weak, " << ds.strong.size() << " strong, " << ds.unlabeled.size()
            << " unlabeled clips\n";

  Trainer trainer(rc.architecture, rc.training, {&ds.weak, &ds.strong, &ds.unlabeled});
  TrainingState state;
  if (!a.resume.empty()) {
    Checkpoint ck = load_checkpoint(a.resume);
    if (to_json(ck.training) != to_json(rc.training) || !(ck.architecture == rc.architecture) ||
        !(ck.features == rc.features))
      throw InvalidInput("checkpoint " + a.resume + " was written with a different configuration");
    state = std::move(ck.state);
    std::cerr << "resuming at step " << state.step << '\n';
  } else {
    state = trainer.initial_state();
  }

  json manifest = json::parse(to_json(rc));
  if (!a.resume.empty()) manifest["resumed_from"] = a.resume;
  write_run_manifest(out, "train", argv_text, manifest);

  std::ofstream log(out / kLossLogName, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError("cannot write " + (out / kLossLogName).string());

  auto save = [&](const fs::path& path) {
    save_checkpoint(path, Checkpoint{rc.architecture, rc.features, rc.training, state});
  };
  const long long stop = a.stop_after >= 0 ? std::min(a.stop_after, rc.training.steps) : rc.training.steps;
  while (state.step < stop) {
    const long long t = state.step;
    const LossBundle losses = trainer.step(state);
    log << loss_record(t, losses) << '\n';
    if (a.checkpoint_every > 0 && state.step % a.checkpoint_every == 0 && state.step < stop) {
      std::ostringstream name;
      name << "step-" << std::setw(6) << std::setfill('0') << state.step << ".ckpt";
      save(out / name.str());
    }
    if (state.step % 50 == 0 || state.step == stop) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << "step " << state.step << "/" << rc.training.steps << "  total " << fmt(losses.total) << "  "
                << static_cast<long>(secs) << "s\n";
    }
  }
  log.flush();
  save(out / kCheckpointName);
  return 0;
}

struct EvaluateArgs {
  std::string checkpoint, data, events, reference, out, cache;
  std::string windows = "7,9,11,13";
  bool use_student = false;
  DecodeFlags decode;
};

int run_evaluate(const EvaluateArgs& a, const std::string& argv_text) {
  const fs::path data = a.data;
  const fs::path ref_path = a.reference.empty() ? data / "validation.tsv" : fs::path(a.reference);

  if (!a.events.empty()) {
    const ClipEvents ref = load_strong_manifest(ref_path);
    const MetricReport report = macro_f_score(ref, read_events_arg(a.events));
    std::cout << fmt(report.macro_f) << '\n';
    if (!a.out.empty()) {
      write_run_manifest(a.out, "evaluate", argv_text, {{"events", a.events}, {"reference", ref_path.string()}});
      std::ofstream rep(fs::path(a.out) / "report.txt");
      write_text_report(rep, report);
    }
    return 0;
  }

  if (a.checkpoint.empty()) throw InvalidInput("evaluate needs --checkpoint or --events");
  std::vector<Model> models;
  models.push_back(load_model(a.checkpoint, a.use_student));
  std::optional<fs::path> cache;
  if (!a.cache.empty()) cache = a.cache;
  Dataset ds = load_validation_set(data, models.front().features, cache);
  if (!a.reference.empty()) ds.validation_events = load_strong_manifest(ref_path);
  const auto preds = predict_all(models, ds.validation);
  const auto windows = parse_windows(a.windows);

  std::vector<double> scores;
  std::vector<MetricReport> reports;
  for (int w : windows) {
    reports.push_back(macro_f_score(ds.validation_events, decode_all(ds.validation, preds, a.decode.config(), w)));
    scores.push_back(reports.back().macro_f);
  }
  if (windows.size() == 1)
    std::cout << fmt(scores.front()) << '\n';
  else
    print_sweep(std::cout, {"macro_F"}, {scores}, windows);

  if (!a.out.empty()) {
    json cfg = {{"checkpoint", a.checkpoint},
                {"weights", a.use_student ? "student" : "teacher"},
                {"windows", windows},
                {"decoding", json::parse(to_json(a.decode.config()))}};
    write_run_manifest(a.out, "evaluate", argv_text, cfg);
    std::ofstream rep(fs::path(a.out) / "report.jsonl");
    for (const auto& r : reports) write_jsonl_report(rep, r);
  }
  return 0;
}

struct EnsembleArgs {
  std::vector<std::string> checkpoints;
  std::string data, out, cache;
  int window = 9;
  bool use_student = false;
  DecodeFlags decode;
};

int run_ensemble(const EnsembleArgs& a, const std::string& argv_text) {
  std::vector<Model> models;
  for (const auto& c : a.checkpoints) models.push_back(load_model(c, a.use_student));
  require_same_front_end(models);
  std::optional<fs::path> cache;
  if (!a.cache.empty()) cache = a.cache;
  const Dataset ds = load_validation_set(a.data, models.front().features, cache);
  const auto preds = predict_all(models, ds.validation);
  const ClipEvents est = decode_all(ds.validation, preds, a.decode.config(), a.window);
  const MetricReport report = macro_f_score(ds.validation_events, est);
  std::cout << fmt(report.macro_f) << '\n';
  if (!a.out.empty()) {
    json cfg = {{"checkpoints", a.checkpoints},
                {"weights", a.use_student ? "student" : "teacher"},
                {"window", a.window},
                {"decoding", json::parse(to_json(a.decode.config()))}};
    write_run_manifest(a.out, "ensemble", argv_text, cfg);
    write_event_table((fs::path(a.out) / "events.tsv").string(), est);
    std::ofstream rep(fs::path(a.out) / "report.txt");
    write_text_report(rep, report);
  }
  return 0;
}

struct PredictArgs {
  std::vector<std::string> checkpoints, wavs;
  std::string data, out = "-", cache;
  int window = 9;
  bool use_student = false;
  DecodeFlags decode;
};

int run_predict(const PredictArgs& a) {
  std::vector<Model> models;
  for (const auto& c : a.checkpoints) models.push_back(load_model(c, a.use_student));
  require_same_front_end(models);
  std::vector<Clip> clips;
  if (!a.wavs.empty()) {
    for (const auto& w : a.wavs) clips.push_back(make_clip(fs::path(w).filename().string(), read_wav(w), models.front().features));
  } else {
    if (a.data.empty()) throw InvalidInput("predict needs --data or --wav");
    std::optional<fs::path> cache;
    if (!a.cache.empty()) cache = a.cache;
    clips = load_validation_set(a.data, models.front().features, cache).validation;
  }
  const ClipEvents est = decode_all(clips, predict_all(models, clips), a.decode.config(), a.window);
  if (a.out == "-")
    write_event_table(std::cout, est);
  else
    write_event_table(a.out, est);
  return 0;
}

struct ScoreArgs {
  std::string reference, events, format = "text";
};

int run_score(const ScoreArgs& a) {
  const MetricReport report = macro_f_score(load_strong_manifest(a.reference), read_events_arg(a.events));
  if (a.format == "jsonl")
    write_jsonl_report(std::cout, report);
  else
    write_text_report(std::cout, report);
  return 0;
}

struct ReportArgs {
  std::vector<std::string> checkpoints;
  std::string data, out, cache;
  std::string windows = "7,9,11,13";
  bool use_student = false;
  DecodeFlags decode;
};

std::string run_label(const Checkpoint& ck) {
  std::ostringstream s;
  s << to_string(ck.training.principle) << " w=" << ck.training.w_max << " seed=" << ck.training.seed;
  return s.str();
}

int run_report(const ReportArgs& a, const std::string& argv_text) {
  std::vector<Model> models;
  for (const auto& c : a.checkpoints) models.push_back(load_model(c, a.use_student));
  require_same_front_end(models);
  std::optional<fs::path> cache;
  if (!a.cache.empty()) cache = a.cache;
  const Dataset ds = load_validation_set(a.data, models.front().features, cache);
  const auto windows = parse_windows(a.windows);

  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  auto add_row = [&](std::string label, const std::vector<Predictions>& preds) {
    std::vector<double> row;
    for (int w : windows)
      row.push_back(macro_f_score(ds.validation_events, decode_all(ds.validation, preds, a.decode.config(), w)).macro_f);
    labels.push_back(std::move(label));
    rows.push_back(std::move(row));
  };
  for (const auto& m : models) add_row(run_label(m.meta), predict_all({m}, ds.validation));
  if (models.size() > 1) add_row("ensemble", predict_all(models, ds.validation));

  print_sweep(std::cout, labels, rows, windows);
  if (!a.out.empty()) {
    json table = json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) table.push_back({{"model", labels[r]}, {"macro_f", rows[r]}});
    write_run_manifest(a.out, "report", argv_text,
                       {{"checkpoints", a.checkpoints}, {"windows", windows}, {"weights", a.use_student ? "student" : "teacher"}});
    std::ofstream(fs::path(a.out) / "table.json") << json{{"windows", windows}, {"rows", table}}.dump(2) << '\n';
  }
  return 0;
}

}  // namespace
}  // namespace hpsed

int main(int argc, char** argv) {
  using namespace hpsed;
  CLI::App app{"Semi-supervised sound event detection"};
  app.set_version_flag("--version", HPSED_VERSION);
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--weak", synth.counts.weak)->capture_default_str();
  c_synth->add_option("--strong", synth.counts.strong)->capture_default_str();
  c_synth->add_option("--unlabeled", synth.counts.unlabeled)->capture_default_str();
  c_synth->add_option("--val", synth.counts.validation)->capture_default_str();
  c_synth->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a student/teacher pair");
  c_train->add_option("--data", train.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  c_train->add_option("--out", train.out, "Run directory")->required();
  c_train->add_option("--config", train.config, "JSON run config; flags override it")->check(CLI::ExistingFile);
  c_train->add_option("--principle", train.principle, "cct, m3 or mean-teacher");
  c_train->add_option("--w-max", train.w_max, "Maximum consistency weight");
  c_train->add_option("--ema-decay", train.ema_decay);
  c_train->add_option("--lr", train.learning_rate);
  c_train->add_option("--alpha", train.alpha, "Beta(alpha, alpha) mixing parameter");
  c_train->add_option("--steps", train.steps);
  c_train->add_option("--ramp-steps", train.ramp_steps);
  c_train->add_option("--seed", train.seed);
  c_train->add_flag("--reduced", train.reduced, "Desk-scale model (128x256 input)");
  c_train->add_flag("--no-augment", train.no_augment);
  c_train->add_option("--cache", train.cache, "Feature cache directory");
  c_train->add_option("--checkpoint-every", train.checkpoint_every, "Also keep step-N checkpoints");
  c_train->add_option("--stop-after", train.stop_after, "Stop (and checkpoint) once this step is reached");
  c_train->add_option("--resume", train.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);

  EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "Macro event F on the validation pool per median window");
  c_eval->add_option("--checkpoint", evaluate.checkpoint);
  c_eval->add_option("--data", evaluate.data, "Dataset directory");
  c_eval->add_option("--events", evaluate.events, "Score this event table (or - for stdin) instead of a model");
  c_eval->add_option("--reference", evaluate.reference, "Reference table (default <data>/validation.tsv)");
  c_eval->add_option("--windows", evaluate.windows)->capture_default_str();
  c_eval->add_flag("--use-student", evaluate.use_student);
  c_eval->add_option("--cache", evaluate.cache);
  c_eval->add_option("--out", evaluate.out, "Write run manifest and report here");
  evaluate.decode.add(c_eval);

  EnsembleArgs ensemble;
  auto* c_ens = app.add_subcommand("ensemble", "Average several models and score the result");
  c_ens->add_option("--checkpoint", ensemble.checkpoints)->required()->expected(1, -1);
  c_ens->add_option("--data", ensemble.data)->required();
  c_ens->add_option("--window", ensemble.window)->capture_default_str();
  c_ens->add_flag("--use-student", ensemble.use_student);
  c_ens->add_option("--cache", ensemble.cache);
  c_ens->add_option("--out", ensemble.out);
  ensemble.decode.add(c_ens);

  PredictArgs predict;
  auto* c_pred = app.add_subcommand("predict", "Decode events for validation clips or WAV files");
  c_pred->add_option("--checkpoint", predict.checkpoints)->required()->expected(1, -1);
  c_pred->add_option("--data", predict.data);
  c_pred->add_option("--wav", predict.wavs)->check(CLI::ExistingFile);
  c_pred->add_option("--window", predict.window)->capture_default_str();
  c_pred->add_flag("--use-student", predict.use_student);
  c_pred->add_option("--cache", predict.cache);
  c_pred->add_option("--out", predict.out, "Event table path, - for stdout")->capture_default_str();
  predict.decode.add(c_pred);

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Compare an event table against a reference");
  c_score->add_option("--reference", score.reference)->required()->check(CLI::ExistingFile);
  c_score->add_option("--events", score.events, "Event table or - for stdin")->required();
  c_score->add_option("--format", score.format)->check(CLI::IsMember({"text", "jsonl"}))->capture_default_str();

  ReportArgs report;
  auto* c_rep = app.add_subcommand("report", "Window sweep table for one or more models");
  c_rep->add_option("--checkpoint", report.checkpoints)->required()->expected(1, -1);
  c_rep->add_option("--data", report.data)->required();
  c_rep->add_option("--windows", report.windows)->capture_default_str();
  c_rep->add_flag("--use-student", report.use_student);
  c_rep->add_option("--cache", report.cache);
  c_rep->add_option("--out", report.out);
  report.decode.add(c_rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string argv_text = command_line(argc, argv);
  try {
    if (*c_synth) return run_synth(synth, argv_text);
    if (*c_train) return run_train(train, argv_text);
    if (*c_eval) return run_evaluate(evaluate, argv_text);
    if (*c_ens) return run_ensemble(ensemble, argv_text);
    if (*c_pred) return run_predict(predict);
    if (*c_score) return run_score(score);
    if (*c_rep) return run_report(report, argv_text);
  } catch (const InvalidInput& e) {
    std::cerr << "hpsed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hpsed: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
