#pragma once

// Test-side reference implementations, kept deliberately independent of the
// library code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "metacmi/environment.hpp"
#include "metacmi/findist.hpp"
#include "metacmi/learners.hpp"
#include "metacmi/losses.hpp"
#include "metacmi/random.hpp"
#include "metacmi/supersample.hpp"

namespace oracles {

using namespace metacmi;

/// Mutual information of a ConditionalTable by the raw double-sum formula
/// sum_{c,v} p(c,v) log[ p(c,v) / (p(c) p(v)) ], tabulating the marginal by hand.
inline double conditional_mi_double_sum(const ConditionalTable& table) {
    std::map<std::pair<std::int64_t, std::int64_t>, double> value_marg;  // (num, den) -> prob
    for (std::size_t c = 0; c < table.conditions(); ++c) {
        if (table.cond_probs[c] == 0.0) continue;
        const auto& law = table.laws[c];
        for (std::size_t i = 0; i < law.size(); ++i) {
            const Rational v = law.value(i);
            value_marg[{v.num, v.den}] += table.cond_probs[c] * law.prob(i);
        }
    }
    double mi = 0.0;
    for (std::size_t c = 0; c < table.conditions(); ++c) {
        if (table.cond_probs[c] == 0.0) continue;
        const auto& law = table.laws[c];
        for (std::size_t i = 0; i < law.size(); ++i) {
            const Rational v = law.value(i);
            const double joint = table.cond_probs[c] * law.prob(i);
            if (joint > 0.0) mi += joint * std::log(joint / (table.cond_probs[c] * value_marg[{v.num, v.den}]));
        }
    }
    return mi;
}

/**
 * Closed form of the expected meta-training loss E[L_{meta-train}(U)] for the
 * Bernoulli / squared-loss / convex-combination instance, derived separately
 * from the library's E[L(U)] formula:
 *   E[L_train] = (1-alpha)^2 (1 - 1/N) Var(D) + mu_bar(1 - mu_bar) - Var(D),
 * with Var(D) = Var_tau(mu) + E_tau[mu(1-mu)]/M.
 */
inline double expected_meta_training_loss_closed_form(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                                      double alpha) {
    const EnvironmentMoments mom = environment_moments(env);
    const double var_d = mom.var_of_means + mom.mean_bernoulli_var / static_cast<double>(m);
    const double mu_bar = mom.mean_of_means;
    return (1.0 - alpha) * (1.0 - alpha) * (1.0 - 1.0 / static_cast<double>(n)) * var_d + mu_bar * (1.0 - mu_bar) -
           var_d;
}

/// Best meta-training loss over a fixed hyperparameter grid (step 0.005).
inline double grid_best_meta_training_loss(std::span<const Dataset> datasets, const BaseLearnerConfig& cfg) {
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g <= 200; ++g)
        best = std::min(best, meta_training_loss(Hyperparameter(g * 0.005), datasets, cfg));
    return best;
}

/// A supersample with i.i.d. fair-coin entries (two-task bookkeeping only).
inline MetaSupersample random_binary_supersample(std::size_t n, std::size_t m, RandomStream& rng) {
    std::vector<std::uint8_t> data(4 * n * m);
    for (auto& v : data) v = rng.fair_bit();
    return MetaSupersample(n, m, std::move(data), std::vector<TaskId>(2 * n, 0));
}

inline MetaSupersample swap_task_rows(const MetaSupersample& ss, std::size_t i) {
    MetaSupersample out = ss;
    for (std::size_t j = 0; j < ss.cols(); ++j)
        std::swap(out.data[i * ss.cols() + j], out.data[(i + ss.n) * ss.cols() + j]);
    std::swap(out.row_tasks[i], out.row_tasks[i + ss.n]);
    return out;
}

}  // namespace oracles
