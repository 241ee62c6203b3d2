// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <random>

namespace tnrf {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
    return splitmix64(seed ^ (splitmix64(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

// [0, 1) with 53 random bits.
constexpr double to_unit_double(std::uint64_t x) { return double(x >> 11) * 0x1.0p-53; }

// Seedable stream with platform-independent output. std::mt19937_64 is fully
// specified; the distribution helpers below are ours because the standard
// library distributions are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
    // Independent substream keyed by (seed, stream).
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(hash_combine(seed, stream)) {}

    std::uint64_t next() { return engine_(); }
    double uniform() { return to_unit_double(engine_()); }
    // Uniform integer in [0, n), unbiased.
    std::uint64_t uniform_int(std::uint64_t n);
    double normal();

  private:
    std::mt19937_64 engine_;
};

// Exact Poisson variate: sequential inversion below mean 10, transformed
// rejection (PTRS) above.
std::int64_t sample_poisson(Rng &rng, double mean);

}  // namespace tnrf
