#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metacmi/environment.hpp"
#include "metacmi/findist.hpp"
#include "metacmi/learners.hpp"
#include "metacmi/losses.hpp"
#include "metacmi/mc.hpp"
#include "metacmi/random.hpp"
#include "metacmi/supersample.hpp"

namespace metacmi {

namespace detail {

constexpr std::size_t max_enumerable_m = 25;

inline void require_enumerable_m(std::size_t m) {
    if (m > max_enumerable_m)
        throw std::invalid_argument("exact CMI pipeline: M too large for selection enumeration");
}

/// Count of ones among the M entries of `row` picked by the selection bitmask.
inline int selected_count(std::span<const std::uint8_t> row, std::uint64_t mask, std::size_t m) {
    int c = 0;
    for (std::size_t j = 0; j < m; ++j) c += row[j + m * ((mask >> j) & 1u)];
    return c;
}

/// selected_count for every selection bitmask of one row.
inline std::vector<int> selected_count_table(std::span<const std::uint8_t> row, std::size_t m) {
    std::vector<int> counts(std::size_t(1) << m);
    for (std::uint64_t mask = 0; mask < counts.size(); ++mask)
        counts[mask] = selected_count(row, mask, m);
    return counts;
}

}  // namespace detail

/**
 * Law of the sample mean D_k(R_k, S_k) of meta-training task slot k, over the
 * 2^{M+1} equally likely (r_k, s_k) configurations: atoms count/M.
 */
inline FiniteDistribution task_selection_law(const MetaSupersample& ss, std::size_t k) {
    detail::require_enumerable_m(ss.m);
    const double w = 1.0 / static_cast<double>(std::uint64_t(2) << ss.m);
    std::map<std::int64_t, double> atoms;
    for (std::uint8_t r = 0; r <= 1; ++r) {
        const auto row = ss.row(training_row_index0(k, r, ss.n));
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << ss.m); ++mask)
            atoms[detail::selected_count(row, mask, ss.m)] += w;
    }
    return FiniteDistribution(static_cast<std::int64_t>(ss.m), atoms);
}

/**
 * Exact value of H(U | supersample = ss) for the deterministic grand-mean
 * meta-learner: the law of U = (1/N) sum_k D_k(R_k, S_k) is the scaled
 * convolution of the per-task selection laws, and since U is a deterministic
 * function of the selection bits, this conditional entropy equals the
 * per-supersample contribution to I(U; R, S_{1:N} | supersample).
 */
inline double env_cmi_exact_given_supersample(const MetaSupersample& ss, const BaseLearnerConfig& /*cfg*/) {
    std::vector<FiniteDistribution> laws;
    laws.reserve(ss.n);
    for (std::size_t k = 0; k < ss.n; ++k) laws.push_back(task_selection_law(ss, k));
    return entropy(convolve_scaled(laws, Rational(1, static_cast<std::int64_t>(ss.n))));
}

/**
 * Exact model weight on the rational grid:
 * W = alpha * c_train / M + (1 - alpha) * c_total / (N * M),
 * where c_train counts ones in the base-learner's training data and c_total
 * sums the selected counts of all N meta-training datasets.
 */
inline Rational model_weight_exact(const BaseLearnerConfig& cfg, std::size_t n, std::size_t m, int c_train,
                                   int c_total) {
    const auto nn = static_cast<std::int64_t>(n);
    const auto mm = static_cast<std::int64_t>(m);
    return Rational(Rational::checked_mul(cfg.alpha.num, c_train), Rational::checked_mul(cfg.alpha.den, mm)) +
           Rational(Rational::checked_mul(cfg.alpha.den - cfg.alpha.num, c_total),
                    Rational::checked_mul(cfg.alpha.den, nn * mm));
}

/// Law of ((1 - alpha)/N) * sum_{k != i} D_k(R_k, S_k) given the supersample.
inline FiniteDistribution task_remainder_law(const MetaSupersample& ss, std::size_t i, const BaseLearnerConfig& cfg) {
    std::vector<FiniteDistribution> laws;
    laws.reserve(ss.n - 1);
    for (std::size_t k = 0; k < ss.n; ++k)
        if (k != i) laws.push_back(task_selection_law(ss, k));
    const Rational scale(cfg.alpha.den - cfg.alpha.num,
                         Rational::checked_mul(cfg.alpha.den, static_cast<std::int64_t>(ss.n)));
    return convolve_scaled(laws, scale);
}

/**
 * Conditional table of W given S_i = s for the 2^M selection masks s, with the
 * supersample and R_i = r_i fixed.
 *
 * The base-learner trains on the complement row (r_i XOR 1) with columns s,
 * while the hyperparameter is trained on the meta-training selection, whose
 * task-i dataset sits on row r_i with the same columns s:
 *   W = alpha * D_i(r_i^c, s) + (1-alpha)/N * [ D_i(r_i, s) + sum_{k != i} D_k ].
 * Given s, everything involving task i is deterministic; the remaining sum's
 * law is the supplied `remainder`.
 */
inline ConditionalTable task_cmi_table(const MetaSupersample& ss, std::size_t i, std::uint8_t r_i,
                                       const BaseLearnerConfig& cfg, const FiniteDistribution& remainder) {
    detail::require_enumerable_m(ss.m);
    if (r_i > 1) throw std::invalid_argument("task_cmi_table: bit must be 0/1");
    const std::size_t k_masks = std::size_t(1) << ss.m;
    const auto train_counts = detail::selected_count_table(ss.row(training_row_index0(i, r_i ^ 1, ss.n)), ss.m);
    const auto meta_counts = detail::selected_count_table(ss.row(training_row_index0(i, r_i, ss.n)), ss.m);
    const auto nn = static_cast<std::int64_t>(ss.n);
    const auto mm = static_cast<std::int64_t>(ss.m);

    std::vector<FiniteDistribution> laws;
    std::vector<std::uint64_t> labels(k_masks);
    laws.reserve(k_masks);
    for (std::uint64_t mask = 0; mask < k_masks; ++mask) {
        labels[mask] = mask;
        const Rational shift =
            Rational(Rational::checked_mul(cfg.alpha.num, train_counts[mask]),
                     Rational::checked_mul(cfg.alpha.den, mm)) +
            Rational(Rational::checked_mul(cfg.alpha.den - cfg.alpha.num, meta_counts[mask]),
                     Rational::checked_mul(cfg.alpha.den, nn * mm));
        laws.push_back(remainder.shifted(shift));
    }
    return ConditionalTable(std::vector<double>(k_masks, 1.0 / static_cast<double>(k_masks)), std::move(laws),
                            std::move(labels));
}

/// Exact I(W; S_i | supersample = ss, R_i = r_i) in nats.
inline double task_cmi_exact_given_supersample(const MetaSupersample& ss, std::size_t i, std::uint8_t r_i,
                                               const BaseLearnerConfig& cfg) {
    return conditional_mi(task_cmi_table(ss, i, r_i, cfg, task_remainder_law(ss, i, cfg)));
}

/// Entropy caps for the two CMI terms, in nats.
inline double entropy_cap_env(std::size_t n, std::size_t m) {
    return static_cast<double>(n) * (1.0 + static_cast<double>(m)) * std::numbers::ln2;
}
inline double entropy_cap_task(std::size_t m) { return static_cast<double>(m) * std::numbers::ln2; }

/// All exact per-supersample CMI quantities in one pass.
struct SupersampleCmi {
    double env_entropy = 0.0;       // H(U | supersample)
    std::vector<double> task_cmi;   // I(W; S_i | supersample, R_i), averaged over R_i in {0,1}
};

/**
 * Exact per-supersample CMI quantities for every task slot. The per-task
 * values average the conditional MI at both values of R_i (the exact
 * expectation over the fair conditioning bit). Remainder laws are assembled
 * from prefix/suffix convolutions so the whole pass does O(N) convolutions
 * instead of O(N^2).
 */
inline SupersampleCmi exact_cmi_given_supersample(const MetaSupersample& ss, const BaseLearnerConfig& cfg) {
    const std::size_t n = ss.n;
    std::vector<FiniteDistribution> laws;
    laws.reserve(n);
    for (std::size_t k = 0; k < n; ++k) laws.push_back(task_selection_law(ss, k));

    SupersampleCmi out;
    out.env_entropy = entropy(convolve_scaled(laws, Rational(1, static_cast<std::int64_t>(n))));

    const Rational scale(cfg.alpha.den - cfg.alpha.num,
                         Rational::checked_mul(cfg.alpha.den, static_cast<std::int64_t>(n)));
    std::vector<FiniteDistribution> scaled;
    scaled.reserve(n);
    for (const auto& law : laws) scaled.push_back(law.scaled(scale));

    std::vector<FiniteDistribution> prefix(n + 1), suffix(n + 1);
    for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = convolve(prefix[k], scaled[k]);
    for (std::size_t k = n; k-- > 0;) suffix[k] = convolve(scaled[k], suffix[k + 1]);

    out.task_cmi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const FiniteDistribution remainder = convolve(prefix[i], suffix[i + 1]);
        double acc = 0.0;
        for (std::uint8_t r = 0; r <= 1; ++r) acc += conditional_mi(task_cmi_table(ss, i, r, cfg, remainder));
        out.task_cmi[i] = 0.5 * acc;
    }
    return out;
}

/// Monte-Carlo estimates of the Theorem-1 CMI terms.
struct CmiTerms {
    Estimate env_cmi;                 // I(U; R, S_{1:N} | supersample), nats
    std::vector<Estimate> task_cmi;   // I(W; S_i | supersample, R_i) per task slot, nats
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double max_env_sample = 0.0;      // largest per-trial env value seen (cap audit)
    double max_task_sample = 0.0;     // largest per-trial task value seen (cap audit)
};

/**
 * Estimate the CMI terms by Monte-Carlo over supersamples: each trial draws a
 * supersample on its own substream and computes the exact inner quantities.
 */
inline CmiTerms estimate_cmi_terms(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                   const BaseLearnerConfig& cfg, std::size_t trials, const RandomStream& rng,
                                   unsigned threads = 1) {
    if (trials < 2) throw std::invalid_argument("estimate_cmi_terms: need at least 2 trials");
    auto samples = run_trials<SupersampleCmi>(trials, threads, [&](std::size_t t) {
        RandomStream r = rng.substream(t);
        return exact_cmi_given_supersample(build_meta_supersample(env, n, m, r), cfg);
    });

    CmiTerms terms;
    terms.trials = trials;
    terms.seed = rng.seed();
    std::vector<double> env_vals(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        env_vals[t] = samples[t].env_entropy;
        terms.max_env_sample = std::max(terms.max_env_sample, samples[t].env_entropy);
        for (double v : samples[t].task_cmi) terms.max_task_sample = std::max(terms.max_task_sample, v);
    }
    assert(terms.max_env_sample <= entropy_cap_env(n, m) + 1e-9);
    assert(terms.max_task_sample <= entropy_cap_task(m) + 1e-9);
    terms.env_cmi = mean_and_stderr(env_vals);
    terms.task_cmi.resize(n);
    std::vector<double> task_vals(trials);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < trials; ++t) task_vals[t] = samples[t].task_cmi[i];
        terms.task_cmi[i] = mean_and_stderr(task_vals);
    }
    return terms;
}

/// Upper limit of the assembled bound: sqrt(2 (b-a)^2 log 2) (sqrt(1+M) + 1).
inline double bound_cap(std::size_t m, const LossBounds& lb) {
    return std::sqrt(2.0 * lb.width() * lb.width() * std::numbers::ln2) *
           (std::sqrt(1.0 + static_cast<double>(m)) + 1.0);
}

/// The assembled bound and everything that went into it.
struct BoundReport {
    Estimate env_cmi;
    std::vector<Estimate> task_cmi;
    double bound_value = 0.0;
    double bound_stderr = 0.0;
    double env_term = 0.0;
    double task_term = 0.0;
    double cap_value = 0.0;
    std::size_t n = 0;
    std::size_t m = 0;
    LossBounds loss_bounds;
    std::size_t trials = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] double mean_task_cmi() const {
        double acc = 0.0;
        for (const auto& e : task_cmi) acc += e.value;
        return task_cmi.empty() ? 0.0 : acc / static_cast<double>(task_cmi.size());
    }
};

namespace detail {

/// sqrt(2 w^2 I / k) with delta-method stderr; I below 1e-15 clamps to 0.
inline Estimate sqrt_bound_term(Estimate cmi, double k, double width) {
    if (cmi.value < 0.0) throw std::invalid_argument("assemble_bound: negative CMI input");
    if (cmi.value < 1e-15) return {0.0, 0.0};
    const double c = 2.0 * width * width / k;
    const double term = std::sqrt(c * cmi.value);
    return {term, 0.5 * c / term * cmi.std_error};
}

}  // namespace detail

/**
 * Assemble the meta-generalization bound from the CMI terms:
 *   sqrt(2 (b-a)^2 I_env / N) + (1/N) sum_i sqrt(2 (b-a)^2 I_task,i / M),
 * the lambda-optimized form of the two exponential inequalities. Standard
 * errors propagate by the delta method and combine in quadrature.
 */
inline BoundReport assemble_bound(const CmiTerms& terms, std::size_t n, std::size_t m, const LossBounds& lb) {
    if (terms.task_cmi.size() != n) throw std::invalid_argument("assemble_bound: need one task CMI per task");
    BoundReport rep;
    rep.env_cmi = terms.env_cmi;
    rep.task_cmi = terms.task_cmi;
    rep.n = n;
    rep.m = m;
    rep.loss_bounds = lb;
    rep.trials = terms.trials;
    rep.seed = terms.seed;

    const Estimate env = detail::sqrt_bound_term(terms.env_cmi, static_cast<double>(n), lb.width());
    rep.env_term = env.value;
    double task_acc = 0.0;
    double task_var = 0.0;
    for (const auto& cmi : terms.task_cmi) {
        const Estimate term = detail::sqrt_bound_term(cmi, static_cast<double>(m), lb.width());
        task_acc += term.value;
        const double se = term.std_error / static_cast<double>(n);
        task_var += se * se;
    }
    rep.task_term = task_acc / static_cast<double>(n);
    rep.bound_value = rep.env_term + rep.task_term;
    rep.bound_stderr = std::sqrt(env.std_error * env.std_error + task_var);
    rep.cap_value = bound_cap(m, lb);
    return rep;
}

/// Conventional-learning special case: sqrt(2 (b-a)^2 I(W; S | supersample) / M).
inline double conventional_cmi_bound(double task_cmi_value, std::size_t m, const LossBounds& lb) {
    return detail::sqrt_bound_term({task_cmi_value, 0.0}, static_cast<double>(m), lb.width()).value;
}

/**
 * Interface for additional gap bounds so external baselines can be compared
 * against the CMI bound without touching the sweep harness.
 */
class BoundPlugin {
  public:
    virtual ~BoundPlugin() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual Estimate compute(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                           const BaseLearnerConfig& cfg, std::size_t trials,
                                           const RandomStream& rng) const = 0;
};

/// The Theorem-1 bound exposed through the plugin interface.
class CmiBoundPlugin final : public BoundPlugin {
  public:
    explicit CmiBoundPlugin(LossBounds lb = {}, unsigned threads = 1) : lb_(lb), threads_(threads) {}

    [[nodiscard]] std::string name() const override { return "cmi"; }

    [[nodiscard]] Estimate compute(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                   const BaseLearnerConfig& cfg, std::size_t trials,
                                   const RandomStream& rng) const override {
        const BoundReport rep = assemble_bound(estimate_cmi_terms(env, n, m, cfg, trials, rng, threads_), n, m, lb_);
        return {rep.bound_value, rep.bound_stderr};
    }

  private:
    LossBounds lb_;
    unsigned threads_;
};

}  // namespace metacmi
