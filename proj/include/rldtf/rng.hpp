#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rldtf {

using Rng = std::mt19937_64;

// Mixes a seed with an ordered list of stream coordinates (splitmix64 chain).
// Streams keyed this way are independent of the order in which they are
// created, so parallel work can draw from them without shared state.
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords);

inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  return Rng(mix_seed(seed, coords));
}

// Uniform real in [lo, hi). Implemented directly on the 64-bit engine output
// so the draw sequence is the same across standard libraries.
double uniform(Rng& rng, double lo, double hi);

// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

bool bernoulli(Rng& rng, double p);

// Standard normal via Box-Muller.
double normal(Rng& rng);

}  // namespace rldtf
