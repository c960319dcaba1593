// SPDX-License-Identifier: Apache-2.0
#include "hpsed/config.hpp"

#include "hpsed/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace hpsed {

using json = nlohmann::ordered_json;

namespace {

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* section) {
  if (!j.is_object()) throw ParseError(std::string(section) + ": expected an object", 0);
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ParseError(std::string(section) + ": unknown key '" + k + "'", 0);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad value for '") + key + "': " + e.what(), 0);
  }
}

const char* pool_name(nn::PoolType p) { return p == nn::PoolType::Average ? "average" : "max"; }

nn::PoolType parse_pool(const std::string& s) {
  if (s == "average") return nn::PoolType::Average;
  if (s == "max") return nn::PoolType::Max;
  throw ParseError("pooling must be 'average' or 'max'", 0);
}

const char* targets_name(SupervisedTargets t) {
  return t == SupervisedTargets::MixedLabels ? "mixed-labels" : "mixed-student-outputs";
}

SupervisedTargets parse_targets(const std::string& s) {
  if (s == "mixed-labels") return SupervisedTargets::MixedLabels;
  if (s == "mixed-student-outputs") return SupervisedTargets::MixedStudentOutputs;
  throw ParseError("supervised_targets must be 'mixed-labels' or 'mixed-student-outputs'", 0);
}

json arch_json(const ArchitectureConfig& c) {
  json j;
  j["n_mels"] = c.n_mels;
  j["input_frames"] = c.input_frames;
  j["pyramid_kernels"] = c.pyramid_kernels;
  j["pyramid_branch_filters"] = c.pyramid_branch_filters;
  j["se_filters"] = c.se_filters;
  j["se_kernel"] = c.se_kernel;
  json pools = json::array();
  for (const auto& [t, f] : c.poolings) pools.push_back({t, f});
  j["poolings"] = pools;
  j["gru_units"] = c.gru_units;
  j["gru_layers"] = c.gru_layers;
  j["se_reduction"] = c.se_reduction;
  j["classes"] = c.classes;
  j["batch_norm"] = c.batch_norm;
  j["pooling"] = pool_name(c.pooling);
  j["bn_eps"] = c.bn_eps;
  j["bn_momentum"] = c.bn_momentum;
  j["dropout"] = c.dropout;
  return j;
}

ArchitectureConfig arch_from(const json& j, ArchitectureConfig c) {
  reject_unknown(j,
                 {"n_mels", "input_frames", "pyramid_kernels", "pyramid_branch_filters", "se_filters", "se_kernel",
                  "poolings", "gru_units", "gru_layers", "se_reduction", "classes", "batch_norm", "pooling", "bn_eps",
                  "bn_momentum", "dropout"},
                 "architecture");
  read(j, "n_mels", c.n_mels);
  read(j, "input_frames", c.input_frames);
  read(j, "pyramid_kernels", c.pyramid_kernels);
  read(j, "pyramid_branch_filters", c.pyramid_branch_filters);
  read(j, "se_filters", c.se_filters);
  read(j, "se_kernel", c.se_kernel);
  if (j.contains("poolings")) {
    std::vector<std::array<int, 2>> p;
    read(j, "poolings", p);
    c.poolings.clear();
    for (const auto& [t, f] : p) c.poolings.emplace_back(t, f);
  }
  read(j, "gru_units", c.gru_units);
  read(j, "gru_layers", c.gru_layers);
  read(j, "se_reduction", c.se_reduction);
  read(j, "classes", c.classes);
  read(j, "batch_norm", c.batch_norm);
  if (j.contains("pooling")) c.pooling = parse_pool(j.at("pooling").get<std::string>());
  read(j, "bn_eps", c.bn_eps);
  read(j, "bn_momentum", c.bn_momentum);
  read(j, "dropout", c.dropout);
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("architecture: ") + e.what(), 0);
  }
  return c;
}

json features_json(const FeatureConfig& c) {
  return json{{"n_fft", c.n_fft}, {"hop", c.hop},           {"n_mels", c.n_mels},
              {"fmin", c.fmin},   {"fmax", c.fmax},         {"log_floor", c.log_floor},
              {"frames", c.frames}};
}

FeatureConfig features_from(const json& j, FeatureConfig c) {
  reject_unknown(j, {"n_fft", "hop", "n_mels", "fmin", "fmax", "log_floor", "frames"}, "features");
  read(j, "n_fft", c.n_fft);
  read(j, "hop", c.hop);
  read(j, "n_mels", c.n_mels);
  read(j, "fmin", c.fmin);
  read(j, "fmax", c.fmax);
  read(j, "log_floor", c.log_floor);
  read(j, "frames", c.frames);
  return c;
}

json training_json(const TrainingConfig& c) {
  json j;
  j["principle"] = to_string(c.principle);
  j["alpha"] = c.alpha;
  j["w_max"] = c.w_max;
  j["ramp_steps"] = c.ramp_steps;
  j["ema_decay"] = c.ema_decay;
  j["ema_warmup"] = c.ema_warmup;
  j["learning_rate"] = c.learning_rate;
  j["grad_clip"] = c.grad_clip;
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["weak_batch"] = c.weak_batch;
  j["strong_batch"] = c.strong_batch;
  j["unlabeled_batch"] = c.unlabeled_batch;
  j["augment"] = c.augment;
  j["noise_sigma"] = c.augmentation.noise_sigma;
  j["time_shift"] = c.augmentation.time_shift;
  j["max_freq_shift"] = c.augmentation.max_freq_shift;
  j["supervised_targets"] = targets_name(c.supervised_targets);
  return j;
}

TrainingConfig training_from(const json& j, TrainingConfig c) {
  reject_unknown(j,
                 {"principle", "alpha", "w_max", "ramp_steps", "ema_decay", "ema_warmup", "learning_rate",
                  "grad_clip", "steps", "seed", "weak_batch", "strong_batch", "unlabeled_batch", "augment",
                  "noise_sigma", "time_shift", "max_freq_shift", "supervised_targets"},
                 "training");
  if (j.contains("principle")) {
    try {
      c.principle = parse_principle(j.at("principle").get<std::string>());
    } catch (const InvalidInput& e) {
      throw ParseError(e.what(), 0);
    }
  }
  read(j, "alpha", c.alpha);
  read(j, "w_max", c.w_max);
  read(j, "ramp_steps", c.ramp_steps);
  read(j, "ema_decay", c.ema_decay);
  read(j, "ema_warmup", c.ema_warmup);
  read(j, "learning_rate", c.learning_rate);
  read(j, "grad_clip", c.grad_clip);
  read(j, "steps", c.steps);
  read(j, "seed", c.seed);
  read(j, "weak_batch", c.weak_batch);
  read(j, "strong_batch", c.strong_batch);
  read(j, "unlabeled_batch", c.unlabeled_batch);
  read(j, "augment", c.augment);
  read(j, "noise_sigma", c.augmentation.noise_sigma);
  read(j, "time_shift", c.augmentation.time_shift);
  read(j, "max_freq_shift", c.augmentation.max_freq_shift);
  if (j.contains("supervised_targets")) c.supervised_targets = parse_targets(j.at("supervised_targets").get<std::string>());
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("training: ") + e.what(), 0);
  }
  return c;
}

json decoding_json(const DecodingConfig& c) {
  json j{{"threshold", c.threshold},
         {"median_window", c.median_window},
         {"frame_duration", c.frame_duration},
         {"filter_input", c.filter_input == FilterInput::Binary ? "binary" : "probabilities"}};
  j["weak_gate"] = c.weak_gate ? json(*c.weak_gate) : json(nullptr);
  return j;
}

DecodingConfig decoding_from(const json& j, DecodingConfig c) {
  reject_unknown(j, {"threshold", "median_window", "frame_duration", "filter_input", "weak_gate"}, "decoding");
  read(j, "threshold", c.threshold);
  read(j, "median_window", c.median_window);
  read(j, "frame_duration", c.frame_duration);
  if (j.contains("filter_input")) {
    const auto s = j.at("filter_input").get<std::string>();
    if (s == "binary")
      c.filter_input = FilterInput::Binary;
    else if (s == "probabilities")
      c.filter_input = FilterInput::Probabilities;
    else
      throw ParseError("filter_input must be 'binary' or 'probabilities'", 0);
  }
  if (j.contains("weak_gate")) {
    if (j.at("weak_gate").is_null())
      c.weak_gate.reset();
    else
      c.weak_gate = j.at("weak_gate").get<double>();
  }
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("decoding: ") + e.what(), 0);
  }
  return c;
}

}  // namespace

std::string to_json(const ArchitectureConfig& c) { return arch_json(c).dump(); }
std::string to_json(const FeatureConfig& c) { return features_json(c).dump(); }
std::string to_json(const TrainingConfig& c) { return training_json(c).dump(); }
std::string to_json(const DecodingConfig& c) { return decoding_json(c).dump(); }
std::string to_json(const MatchConfig& c) {
  return json{{"onset_collar", c.onset_collar},
              {"offset_collar_abs", c.offset_collar_abs},
              {"offset_collar_ratio", c.offset_collar_ratio}}
      .dump();
}

ArchitectureConfig architecture_from_json(std::string_view text, ArchitectureConfig base) {
  return arch_from(parse(text), std::move(base));
}
FeatureConfig features_from_json(std::string_view text, FeatureConfig base) { return features_from(parse(text), base); }
TrainingConfig training_from_json(std::string_view text, TrainingConfig base) {
  return training_from(parse(text), std::move(base));
}
DecodingConfig decoding_from_json(std::string_view text, DecodingConfig base) {
  return decoding_from(parse(text), std::move(base));
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const json j = parse(ss.str());
  reject_unknown(j, {"architecture", "features", "training", "decoding"}, "config");
  if (j.contains("architecture")) base.architecture = arch_from(j["architecture"], base.architecture);
  if (j.contains("features")) base.features = features_from(j["features"], base.features);
  if (j.contains("training")) base.training = training_from(j["training"], base.training);
  if (j.contains("decoding")) base.decoding = decoding_from(j["decoding"], base.decoding);
  return base;
}

std::string to_json(const RunConfig& c) {
  json j;
  j["architecture"] = arch_json(c.architecture);
  j["features"] = features_json(c.features);
  j["training"] = training_json(c.training);
  j["decoding"] = decoding_json(c.decoding);
  return j.dump(2);
}

}  // namespace hpsed
