#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace metacmi {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * Seeded random stream with cheap substream derivation.
 *
 * substream(t) derives a generator from (seed, stream id, t) only — not from
 * the parent's engine state — so Monte-Carlo trial t produces identical draws
 * no matter which worker thread runs it or in which order. All sampling goes
 * through uniform01() (mt19937_64 is fully specified by the standard), which
 * keeps sequences reproducible across platforms.
 */
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {}

    [[nodiscard]] RandomStream substream(std::uint64_t index) const {
        return RandomStream(seed_, splitmix64(stream_ + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    std::uint8_t fair_bit() { return bernoulli(0.5) ? 1 : 0; }

    /// Uniform index in [0, k).
    std::size_t uniform_index(std::size_t k) {
        if (k == 0) throw std::invalid_argument("RandomStream::uniform_index: k must be positive");
        const auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(k));
        return i < k ? i : k - 1;
    }

    /// Sample an index according to a probability vector (assumed normalized).
    std::size_t categorical(std::span<const double> probs) {
        const double u = uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return probs.empty() ? throw std::invalid_argument("RandomStream::categorical: empty probs") : probs.size() - 1;
    }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace metacmi
