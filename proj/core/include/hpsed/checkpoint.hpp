// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/features.hpp"
#include "hpsed/model.hpp"
#include "hpsed/trainer.hpp"

#include <filesystem>

namespace hpsed {

/// Everything needed to score a model or resume its training bit-exactly.
/// Randomness is keyed by (seed, stream, step), so the seed and step counter
/// are the complete generator state.
struct Checkpoint {
  ArchitectureConfig architecture;
  FeatureConfig features;
  TrainingConfig training;
  TrainingState state;
};

/// Layout: "HPSEDCK1", u64 header length, JSON header (configs, step, RNG
/// keys, tensor manifest of names and shapes), then the tensors as
/// little-endian float32 in manifest order. Written via a temporary file and
/// renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws IoError when unreadable and ParseError when the header or tensor
/// manifest disagrees with the architecture.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hpsed
