#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace metacmi {

/// A Monte-Carlo estimate: sample mean and its standard error (sd / sqrt(trials)).
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Pairwise (cascade) summation: deterministic and more accurate than a
/// running sum, independent of how the values were produced.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline Estimate mean_and_stderr(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean_and_stderr: no samples");
    const double n = static_cast<double>(xs.size());
    const double mean = pairwise_sum(xs) / n;
    if (xs.size() == 1) return {mean, 0.0};
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

inline unsigned resolve_threads(unsigned threads) {
    if (threads != 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/**
 * Run `fn(t)` for t in [0, trials) and collect the results in trial order.
 *
 * Results land in a preallocated vector indexed by trial, and every trial
 * derives its own RNG substream from its index, so the output is identical
 * for any thread count.
 */
template <typename T, typename Fn>
std::vector<T> run_trials(std::size_t trials, unsigned threads, Fn&& fn) {
    std::vector<T> out(trials);
    threads = resolve_threads(threads);
    if (threads <= 1 || trials < 2 * threads) {
        for (std::size_t t = 0; t < trials; ++t) out[t] = fn(t);
        return out;
    }
    std::vector<std::thread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (trials + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(trials, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&out, &fn, lo, hi] {
            for (std::size_t t = lo; t < hi; ++t) out[t] = fn(t);
        });
    }
    for (auto& th : workers) th.join();
    return out;
}

}  // namespace metacmi
