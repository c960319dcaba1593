// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hpsed {

using Rng = std::mt19937_64;

/// Named sub-streams of a single run seed. A stream is a pure function of
/// (seed, name, index), so any step of a run can be replayed in isolation.
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

/// Per-clip seed derived from a run seed; used for parallel-safe generation.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);

}  // namespace hpsed
