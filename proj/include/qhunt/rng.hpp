#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace qhunt {

/// Session-scoped random source.
///
/// Wraps mt19937_64 (whose output sequence is fixed by the standard) and
/// performs its own range reduction, so a (seed, draw count) pair
/// reproduces the exact same stream on every platform. Every call to a
/// sampling method consumes one or more raw draws; `draws()` counts them.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    /// Rebuild a generator that has already produced `draws` raw values.
    static Rng restore(std::uint64_t seed, std::uint64_t draws) {
        Rng r(seed);
        r.engine_.discard(draws);
        r.draws_ = draws;
        return r;
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t draws() const noexcept { return draws_; }

    std::uint64_t next() {
        ++draws_;
        return engine_();
    }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on [0, 1], both endpoints reachable.
    double uniform_closed() {
        constexpr double denom = static_cast<double>((std::uint64_t{1} << 53) - 1);
        return static_cast<double>(next() >> 11) / denom;
    }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - (max % n);
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return x % n;
    }

    bool operator==(const Rng& other) const {
        return seed_ == other.seed_ && draws_ == other.draws_;
    }

private:
    std::uint64_t seed_;
    std::uint64_t draws_ = 0;
    std::mt19937_64 engine_;
};

/// Derive an independent stream seed from a base seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace qhunt
