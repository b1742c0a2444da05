#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "metacmi/environment.hpp"
#include "metacmi/learners.hpp"
#include "metacmi/mc.hpp"
#include "metacmi/supersample.hpp"

namespace metacmi {

/// Loss range endpoints [a, b]; the squared-loss/Bernoulli instance has [0, 1].
struct LossBounds {
    double a = 0.0;
    double b = 1.0;

    LossBounds() = default;
    LossBounds(double lo, double hi) : a(lo), b(hi) {
        if (!(a < b)) throw std::invalid_argument("LossBounds: need a < b");
    }

    [[nodiscard]] double width() const { return b - a; }
};

/// Squared loss on binary samples.
inline double loss(ModelWeight w, std::uint8_t z) {
    const double d = w - static_cast<double>(z);
    return d * d;
}

/// Empirical training loss: mean of per-sample losses.
inline double training_loss(ModelWeight w, const Dataset& dataset) {
    if (dataset.empty()) throw std::invalid_argument("training_loss: empty dataset");
    double acc = 0.0;
    for (auto z : dataset.samples) acc += loss(w, z);
    return acc / static_cast<double>(dataset.size());
}

/// E_Z[(w - Z)^2] for Z ~ Bernoulli(mu): (w - mu)^2 + mu(1 - mu).
inline double per_task_generalization_loss(ModelWeight w, double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("per_task_generalization_loss: mu must lie in [0,1]");
    const double d = w - mu;
    return d * d + mu * (1.0 - mu);
}

/**
 * Average per-task training loss for a given hyperparameter: train the
 * base-learner on the dataset and evaluate its training loss on the same
 * dataset. With the deterministic convex-combination learner the expectation
 * over the learner output collapses to a point evaluation.
 */
inline double avg_per_task_training_loss(const Hyperparameter& u, const Dataset& dataset,
                                         const BaseLearnerConfig& cfg) {
    return training_loss(base_learn(cfg, dataset, u), dataset);
}

/// Meta-training loss: mean over tasks of the average per-task training loss.
inline double meta_training_loss(const Hyperparameter& u, std::span<const Dataset> meta_training,
                                 const BaseLearnerConfig& cfg) {
    if (meta_training.empty()) throw std::invalid_argument("meta_training_loss: no datasets");
    double acc = 0.0;
    for (const Dataset& d : meta_training) acc += avg_per_task_training_loss(u, d, cfg);
    return acc / static_cast<double>(meta_training.size());
}

/**
 * Exact meta-generalization loss of hyperparameter u for the Bernoulli /
 * squared-loss / convex-combination instance:
 *
 *   L(u) = sum_tau p_tau [ (1-alpha)^2 (u - mu_tau)^2
 *                          + alpha^2 mu_tau(1-mu_tau)/M + mu_tau(1-mu_tau) ].
 */
inline double meta_generalization_loss_exact(const Hyperparameter& u, const TaskEnvironment& env, std::size_t m,
                                             const BaseLearnerConfig& cfg) {
    if (m == 0) throw std::invalid_argument("meta_generalization_loss_exact: m must be positive");
    const double a = cfg.alpha_real();
    const double one_minus_a2 = (1.0 - a) * (1.0 - a);
    const double data_factor = a * a / static_cast<double>(m) + 1.0;
    double acc = 0.0;
    for (std::size_t t = 0; t < env.task_count(); ++t) {
        const double mu = env.task_mean(t);
        const double d = u.u - mu;
        acc += env.task_prob(t) * (one_minus_a2 * d * d + data_factor * mu * (1.0 - mu));
    }
    return acc;
}

/**
 * Within-task gap on the row picked by r_i: training loss of w on the
 * complement-selected half minus on the selected half,
 * L_{Z_i(r_i, s_bar)}(w) - L_{Z_i(r_i, s)}(w).
 */
inline double within_task_gap_hat(ModelWeight w, const MetaSupersample& ss, std::uint8_t r_i,
                                  std::span<const std::uint8_t> s_bits, std::size_t i) {
    if (s_bits.size() != ss.m) throw std::invalid_argument("within_task_gap_hat: selection length must be M");
    const auto row = ss.row(training_row_index0(i, r_i, ss.n));
    std::vector<std::uint8_t> comp(s_bits.begin(), s_bits.end());
    for (auto& b : comp) b ^= 1;
    return training_loss(w, select_samples(row, comp)) - training_loss(w, select_samples(row, s_bits));
}

/**
 * Environment-level gap: meta-training loss of u on the complement-selected
 * data minus on the selected data, L_{Z(r_bar, s_bar)}(u) - L_{Z(r, s)}(u).
 */
inline double env_level_gap_tilde(const Hyperparameter& u, const MetaSupersample& ss, const Selection& sel,
                                  const BaseLearnerConfig& cfg) {
    const auto train = meta_training_set(ss, sel);
    const auto test = meta_training_set(ss, sel.complement());
    return meta_training_loss(u, test, cfg) - meta_training_loss(u, train, cfg);
}

/**
 * Monte-Carlo estimate of the average meta-generalization gap
 * E[L(U) - L_meta-train(U)]: per trial, draw a meta-training set, run the
 * meta-learner, and take the exact meta-generalization loss minus the
 * meta-training loss. Trial t uses RNG substream t, so the estimate is
 * independent of the worker count.
 */
inline Estimate true_avg_meta_gap_mc(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                     const BaseLearnerConfig& cfg, std::size_t trials, const RandomStream& rng,
                                     unsigned threads = 1, const MetaLearner* meta = nullptr) {
    if (trials == 0) throw std::invalid_argument("true_avg_meta_gap_mc: trials must be positive");
    const GrandMeanMetaLearner default_meta;
    const MetaLearner& learner = meta ? *meta : default_meta;
    auto gaps = run_trials<double>(trials, threads, [&](std::size_t t) {
        RandomStream r = rng.substream(t);
        std::vector<Dataset> datasets;
        datasets.reserve(n);
        for (std::size_t i = 0; i < n; ++i) datasets.push_back(sample_dataset(env, sample_task(env, r), m, r));
        const Hyperparameter u = learner.learn(datasets, r);
        return meta_generalization_loss_exact(u, env, m, cfg) - meta_training_loss(u, datasets, cfg);
    });
    return mean_and_stderr(gaps);
}

}  // namespace metacmi
