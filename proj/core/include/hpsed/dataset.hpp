// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/features.hpp"
#include "hpsed/postprocess.hpp"
#include "hpsed/synth.hpp"
#include "hpsed/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hpsed {

/// Feature-space clips of every pool, ready for training and scoring.
struct Dataset {
  std::vector<Clip> weak;
  std::vector<Clip> strong;
  std::vector<Clip> unlabeled;
  std::vector<Clip> validation;
  ClipEvents strong_events;
  ClipEvents validation_events;
};

/// Strong clips get both a rasterized grid and the derived weak label.
Clip make_clip(std::string id, const Waveform& audio, const FeatureConfig& features,
               std::optional<WeakLabel> weak = std::nullopt, const EventList* events = nullptr);

/// Reads the four manifests in `dir` and extracts features from audio/<pool>/.
/// With `cache_dir`, features are read from / written to binary caches there.
Dataset load_dataset(const std::filesystem::path& dir, const FeatureConfig& features,
                     const std::optional<std::filesystem::path>& cache_dir = std::nullopt);
/// Only the validation pool; the other members stay empty.
Dataset load_validation_set(const std::filesystem::path& dir, const FeatureConfig& features,
                            const std::optional<std::filesystem::path>& cache_dir = std::nullopt);

/// Same clips as generate_dataset() writes for `seed`, built in memory.
Dataset synth_dataset(std::uint64_t seed, const DatasetCounts& counts, const FeatureConfig& features);

}  // namespace hpsed
