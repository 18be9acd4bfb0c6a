#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "mggm/types.hpp"

namespace mggm {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent substream key from a master seed and a path of
/// integer tags (e.g. {session, trial}). Pure function of its inputs, so
/// work split across threads draws the same numbers in any order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Tags naming the top-level substreams.
enum class Stream : std::uint64_t {
    Support = 1,
    SpatialPrecision = 2,
    Trials = 3,
    Bootstrap = 4,
    Replication = 5,
    CrossValidation = 6,
};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t master, std::initializer_list<std::uint64_t> path)
        : engine_(derive_seed(master, path)) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    bool bernoulli(double prob) { return uniform() < prob; }
    double normal() { return normal_(engine_); }

    Matrix normal_matrix(Index rows, Index cols);

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace mggm
