#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "halluforge/errors.hpp"

namespace halluforge {

// std::mt19937_64 output is fully specified by the standard; the bounded
// draws below avoid std::uniform_int_distribution, whose mapping is
// implementation-defined and would break cross-machine reproducibility.
using Rng = std::mt19937_64;

/// Unbiased draw from [0, n) via rejection sampling.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    require(n > 0, ErrorCode::precondition, "uniform_below: n must be positive");
    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (kMax % n + 1) % n;  // 2^64 mod n
    while (true) {
        std::uint64_t v = rng();
        if (rem == 0 || v < kMax - rem + 1) return v % n;
    }
}

/// Draw from [0, weights.size()) with probability weights[i] / sum(weights).
/// Integer weights keep the probabilities exact.
inline std::size_t weighted_index(Rng& rng, const std::vector<std::uint64_t>& weights) {
    std::uint64_t total = 0;
    for (std::uint64_t w : weights) total += w;
    require(total > 0, ErrorCode::precondition, "weighted_index: zero total weight");
    std::uint64_t u = uniform_below(rng, total);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return weights.size() - 1;  // unreachable
}

/// Seeded sample of k distinct indices from [0, n), in draw order
/// (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

/// Stable per-item seed derived from a run seed and an item key, so results
/// do not depend on processing order.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view key);

}  // namespace halluforge
