#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wildrefit {

using Engine = std::mt19937_64;

// Named sub-streams of a replication seed.
enum class Stream : std::uint64_t {
  design = 1,
  model = 2,
  noise = 3,
  signs = 4,
  inputs = 5,
  holdout = 6,
  solver = 7,
  replication = 8,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Counter-based derivation: the child seed depends only on (parent, stream, index),
// never on how many other children were drawn before it.
std::uint64_t derive_seed(std::uint64_t parent, Stream stream, std::uint64_t index = 0) noexcept;

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

}  // namespace wildrefit
