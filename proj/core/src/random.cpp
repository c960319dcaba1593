// SPDX-License-Identifier: Apache-2.0
#include "hpsed/random.hpp"

namespace hpsed {
namespace {

// FNV-1a; stable across platforms unlike std::hash.
std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  return splitmix(splitmix(seed ^ hash_name(name)) + index);
}

Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  const std::uint64_t s = derive_seed(seed, name, index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(seed)};
  return Rng(seq);
}

}  // namespace hpsed
