#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace chartsum {

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

/// Lowercase 16-digit hex rendering of a 64-bit hash.
std::string hex64(std::uint64_t value);

// std::mt19937_64's output sequence is fixed by the standard, the
// distributions are not. Everything random in this project goes through
// these helpers so a seed means the same thing on every toolchain.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t bound) {
    return static_cast<std::size_t>(rng() % bound);
}

template <class T>
void seeded_shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::swap(items[i - 1], items[uniform_index(rng, i)]);
    }
}

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Work is
/// statically partitioned; callers write results into pre-sized slots so
/// output never depends on scheduling. Rethrows the first exception by index.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

/// Rounds a finite value to `decimals` places, ties away from zero, applied
/// to the shortest round-trip decimal form (so 0.52675 -> "0.5268").
std::string round_half_up(double value, int decimals);

}  // namespace chartsum
