#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "metacmi/environment.hpp"
#include "metacmi/learners.hpp"
#include "metacmi/supersample.hpp"

namespace metacmi {

/**
 * Brute-force reference computations that enumerate selection vectors (and,
 * for small instances, entire supersamples) directly. These deliberately
 * avoid the FiniteDistribution pipeline: values are tabulated by integer
 * keys and information quantities come out of the raw double-sum formulas,
 * so they are an independent check on the exact pipeline.
 *
 * Everything here is exponential in N(M+1) or in the supersample cell count
 * and is meant for desk-size instances only (N <= 2, M <= 2 for full
 * supersample enumeration).
 */
namespace enumeration {

namespace detail {

inline int selected_count(std::span<const std::uint8_t> row, std::uint64_t mask, std::size_t m) {
    int c = 0;
    for (std::size_t j = 0; j < m; ++j) c += row[j + m * ((mask >> j) & 1u)];
    return c;
}

/// counts[row][mask] for every matrix row and selection bitmask.
inline std::vector<std::vector<int>> count_tables(const MetaSupersample& ss) {
    std::vector<std::vector<int>> counts(ss.rows());
    for (std::size_t i = 0; i < ss.rows(); ++i) {
        counts[i].resize(std::size_t(1) << ss.m);
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << ss.m); ++mask)
            counts[i][mask] = selected_count(ss.row(i), mask, ss.m);
    }
    return counts;
}

inline void require_bits(std::size_t bits) {
    if (bits > 24) throw std::invalid_argument("enumeration: instance too large for brute force");
}

}  // namespace detail

/**
 * H(U | supersample) by enumerating all 2^{N(M+1)} selection configurations:
 * tabulate U's exact value (an integer count over denominator N*M) for every
 * configuration and take the entropy of the histogram.
 */
inline double env_cmi_by_selection_enumeration(const MetaSupersample& ss) {
    const std::size_t n = ss.n;
    const std::size_t m = ss.m;
    const std::size_t bits = n * (m + 1);
    detail::require_bits(bits);
    const auto counts = detail::count_tables(ss);
    const std::uint64_t mask_m = (std::uint64_t(1) << m) - 1;
    std::map<int, double> hist;
    const double w = 1.0 / static_cast<double>(std::uint64_t(1) << bits);
    for (std::uint64_t sel = 0; sel < (std::uint64_t(1) << bits); ++sel) {
        int total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t r_i = (sel >> i) & 1u;
            const std::uint64_t s_i = (sel >> (n + i * m)) & mask_m;
            total += counts[training_row_index0(i, r_i, n)][s_i];
        }
        hist[total] += w;
    }
    double h = 0.0;
    for (const auto& [key, p] : hist)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

/**
 * I(W; S_i | supersample, R_i = r_i) by enumerating all (s_i, other-task
 * selection) configurations, tabulating the joint law of (W, S_i) with W keyed
 * by its exact integer numerator, and evaluating the double-sum
 * sum_{w,s} p(w,s) log[ p(w,s) / (p(w) p(s)) ].
 */
inline double task_cmi_by_selection_enumeration(const MetaSupersample& ss, std::size_t i, std::uint8_t r_i,
                                                const BaseLearnerConfig& cfg) {
    const std::size_t n = ss.n;
    const std::size_t m = ss.m;
    detail::require_bits((n - 1) * (m + 1) + m);
    const auto counts = detail::count_tables(ss);
    const std::uint64_t mask_m = (std::uint64_t(1) << m) - 1;
    const std::size_t other_bits = (n - 1) * (m + 1);
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < n; ++k)
        if (k != i) others.push_back(k);

    // W = [a_num*N*c_train + (a_den-a_num)*c_total] / (a_den*N*M); key by numerator.
    const std::int64_t a_num = cfg.alpha.num;
    const std::int64_t a_den = cfg.alpha.den;
    std::map<std::pair<std::int64_t, std::uint64_t>, double> joint;
    const double w = 1.0 / static_cast<double>(std::uint64_t(1) << (other_bits + m));
    for (std::uint64_t s_i = 0; s_i <= mask_m; ++s_i) {
        const int c_train = counts[training_row_index0(i, r_i ^ 1, n)][s_i];
        const int c_meta = counts[training_row_index0(i, r_i, n)][s_i];
        for (std::uint64_t rest = 0; rest < (std::uint64_t(1) << other_bits); ++rest) {
            int c_total = c_meta;
            for (std::size_t idx = 0; idx < others.size(); ++idx) {
                const std::uint8_t r_k = (rest >> (idx * (m + 1))) & 1u;
                const std::uint64_t s_k = (rest >> (idx * (m + 1) + 1)) & mask_m;
                c_total += counts[training_row_index0(others[idx], r_k, n)][s_k];
            }
            const std::int64_t key = a_num * static_cast<std::int64_t>(n) * c_train + (a_den - a_num) * c_total;
            joint[{key, s_i}] += w;
        }
    }

    std::map<std::int64_t, double> w_marg;
    std::map<std::uint64_t, double> s_marg;
    for (const auto& [key, p] : joint) {
        w_marg[key.first] += p;
        s_marg[key.second] += p;
    }
    double mi = 0.0;
    for (const auto& [key, p] : joint)
        if (p > 0.0) mi += p * std::log(p / (w_marg[key.first] * s_marg[key.second]));
    return mi < 0.0 ? 0.0 : mi;
}

/**
 * Enumerate every supersample realization of the environment: all task
 * assignments for the 2N rows and all binary matrices, each with its exact
 * probability. Calls fn(ss, weight) for every realization with positive
 * weight. Feasible only when |T|^{2N} and 2^{4NM} are desk-size.
 */
template <typename Fn>
void for_each_weighted_supersample(const TaskEnvironment& env, std::size_t n, std::size_t m, Fn&& fn) {
    const std::size_t rows = 2 * n;
    const std::size_t cols = 2 * m;
    const std::size_t cells = rows * cols;
    if (cells > 20) throw std::invalid_argument("for_each_weighted_supersample: matrix too large");
    double tuples = 1.0;
    for (std::size_t i = 0; i < rows; ++i) tuples *= static_cast<double>(env.task_count());
    if (tuples > 65536.0) throw std::invalid_argument("for_each_weighted_supersample: too many task assignments");

    std::vector<TaskId> tasks(rows, 0);
    MetaSupersample ss;
    ss.n = n;
    ss.m = m;
    ss.data.assign(cells, 0);
    for (;;) {
        double task_weight = 1.0;
        for (TaskId t : tasks) task_weight *= env.task_prob(t);
        if (task_weight > 0.0) {
            ss.row_tasks = tasks;
            // Per-row weight of each of the 2^{2m} bit patterns.
            std::vector<std::vector<double>> row_w(rows, std::vector<double>(std::size_t(1) << cols, 1.0));
            for (std::size_t i = 0; i < rows; ++i) {
                const double mu = env.task_mean(tasks[i]);
                for (std::uint64_t bits = 0; bits < (std::uint64_t(1) << cols); ++bits) {
                    double p = 1.0;
                    for (std::size_t j = 0; j < cols; ++j) p *= ((bits >> j) & 1u) ? mu : 1.0 - mu;
                    row_w[i][bits] = p;
                }
            }
            for (std::uint64_t bits = 0; bits < (std::uint64_t(1) << cells); ++bits) {
                double weight = task_weight;
                for (std::size_t i = 0; i < rows; ++i)
                    weight *= row_w[i][(bits >> (i * cols)) & ((std::uint64_t(1) << cols) - 1)];
                if (weight <= 0.0) continue;
                for (std::size_t c = 0; c < cells; ++c) ss.data[c] = (bits >> c) & 1u;
                fn(static_cast<const MetaSupersample&>(ss), weight);
            }
        }
        // Odometer over task assignments.
        std::size_t pos = 0;
        while (pos < rows) {
            if (++tasks[pos] < env.task_count()) break;
            tasks[pos] = 0;
            ++pos;
        }
        if (pos == rows) break;
    }
}

}  // namespace enumeration
}  // namespace metacmi
