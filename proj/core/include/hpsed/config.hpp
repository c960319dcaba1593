// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/features.hpp"
#include "hpsed/metrics.hpp"
#include "hpsed/model.hpp"
#include "hpsed/postprocess.hpp"
#include "hpsed/trainer.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace hpsed {

/// JSON text for each configuration type. Readers start from `base` and
/// overwrite only the keys present; unknown keys raise ParseError.
std::string to_json(const ArchitectureConfig& c);
std::string to_json(const FeatureConfig& c);
std::string to_json(const TrainingConfig& c);
std::string to_json(const DecodingConfig& c);
std::string to_json(const MatchConfig& c);

ArchitectureConfig architecture_from_json(std::string_view text, ArchitectureConfig base = {});
FeatureConfig features_from_json(std::string_view text, FeatureConfig base = {});
TrainingConfig training_from_json(std::string_view text, TrainingConfig base = {});
DecodingConfig decoding_from_json(std::string_view text, DecodingConfig base = {});

/// A run configuration file: an object with optional "architecture",
/// "features", "training" and "decoding" sections.
struct RunConfig {
  ArchitectureConfig architecture;
  FeatureConfig features;
  TrainingConfig training;
  DecodingConfig decoding;
};

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
std::string to_json(const RunConfig& c);

}  // namespace hpsed
