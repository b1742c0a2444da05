#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metacmi/bounds.hpp"
#include "metacmi/enumeration.hpp"
#include "metacmi/findist.hpp"
#include "metacmi/losses.hpp"
#include "metacmi/mc.hpp"

namespace metacmi {

/**
 * Outcome of one numerical check. The pass rule is uniform:
 * passed <=> statistic <= threshold + 3 * std_error.
 * Identity checks at enumeration scale carry std_error = 0 and an absolute
 * tolerance as threshold; Monte-Carlo checks carry their standard error.
 */
struct CheckResult {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    double std_error = 0.0;
    bool passed = false;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

inline CheckResult make_check(std::string name, double statistic, double threshold, double std_error,
                              std::size_t trials, std::uint64_t seed) {
    CheckResult c;
    c.name = std::move(name);
    c.statistic = statistic;
    c.threshold = threshold;
    c.std_error = std_error;
    c.passed = statistic <= threshold + 3.0 * std_error;
    c.trials = trials;
    c.seed = seed;
    return c;
}

/// One draw for an exponential-inequality check: gap value plus the exact
/// conditional information density at the realized outcome.
struct ExpSample {
    double gap = 0.0;
    double density = 0.0;
};

namespace detail {

inline std::vector<std::uint8_t> mask_bits(std::uint64_t mask, std::size_t m) {
    std::vector<std::uint8_t> bits(m);
    for (std::size_t j = 0; j < m; ++j) bits[j] = (mask >> j) & 1u;
    return bits;
}

inline std::uint64_t draw_mask(std::size_t m, RandomStream& rng) {
    std::uint64_t mask = 0;
    for (std::size_t j = 0; j < m; ++j) mask |= static_cast<std::uint64_t>(rng.fair_bit()) << j;
    return mask;
}

}  // namespace detail

/**
 * Draw (gap, density) pairs for the task-level exponential inequality.
 *
 * Per trial: a fresh supersample, a uniformly chosen task slot i, a fair
 * conditioning bit r_i, the selection S_i and the other tasks' selections.
 * The base-learner trains on the complement row (r_i XOR 1) with columns S_i
 * while the hyperparameter trains on the selected data; the gap is evaluated
 * on the row the base-learner trained on, and the density is read off the
 * exact conditional table for (supersample, r_i).
 */
inline std::vector<ExpSample> sample_task_exponential(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                                      const BaseLearnerConfig& cfg, std::size_t trials,
                                                      const RandomStream& rng, unsigned threads = 1) {
    return run_trials<ExpSample>(trials, threads, [&](std::size_t t) {
        RandomStream r = rng.substream(t);
        const MetaSupersample ss = build_meta_supersample(env, n, m, r);
        const std::size_t i = r.uniform_index(n);
        const std::uint8_t r_i = r.fair_bit();
        const std::uint64_t s_mask = detail::draw_mask(m, r);
        int c_total = detail::selected_count(ss.row(training_row_index0(i, r_i, n)), s_mask, m);
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            const std::uint8_t r_k = r.fair_bit();
            const std::uint64_t mask_k = detail::draw_mask(m, r);
            c_total += detail::selected_count(ss.row(training_row_index0(k, r_k, n)), mask_k, m);
        }
        const int c_train = detail::selected_count(ss.row(training_row_index0(i, r_i ^ 1, n)), s_mask, m);

        const ConditionalTable table = task_cmi_table(ss, i, r_i, cfg, task_remainder_law(ss, i, cfg));
        const FiniteDistribution marginal = table.marginal();
        const Rational w = model_weight_exact(cfg, n, m, c_train, c_total);
        ExpSample sample;
        sample.density = information_density(table, s_mask, w, marginal);
        sample.gap = within_task_gap_hat(w.to_double(), ss, r_i ^ 1, detail::mask_bits(s_mask, m), i);
        return sample;
    });
}

/**
 * Draw (gap, density) pairs for the environment-level exponential inequality.
 * The density for the deterministic meta-learner is -log P(U | supersample)
 * at the realized hyperparameter.
 */
inline std::vector<ExpSample> sample_env_exponential(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                                     const BaseLearnerConfig& cfg, std::size_t trials,
                                                     const RandomStream& rng, unsigned threads = 1) {
    return run_trials<ExpSample>(trials, threads, [&](std::size_t t) {
        RandomStream r = rng.substream(t);
        const MetaSupersample ss = build_meta_supersample(env, n, m, r);
        const Selection sel = sample_selection(n, m, r);

        std::vector<FiniteDistribution> laws;
        laws.reserve(n);
        int total = 0;
        for (std::size_t k = 0; k < n; ++k) {
            laws.push_back(task_selection_law(ss, k));
            std::uint64_t mask = 0;
            for (std::size_t j = 0; j < m; ++j) mask |= static_cast<std::uint64_t>(sel.s_row(k)[j]) << j;
            total += detail::selected_count(ss.row(training_row_index0(k, sel.r[k], n)), mask, m);
        }
        const FiniteDistribution u_law = convolve_scaled(laws, Rational(1, static_cast<std::int64_t>(n)));
        const Rational u(total, static_cast<std::int64_t>(n * m));
        const double p = u_law.prob_of(u);
        if (p <= 0.0) throw std::logic_error("sample_env_exponential: realized hyperparameter not in exact law");
        ExpSample sample;
        sample.density = -std::log(p);
        sample.gap = env_level_gap_tilde(Hyperparameter(u.to_double()), ss, sel, cfg);
        return sample;
    });
}

namespace detail {

inline std::vector<CheckResult> exponential_checks(std::string_view prefix, std::span<const ExpSample> samples,
                                                   std::span<const double> lambdas, double subgaussian_k,
                                                   const LossBounds& lb, std::uint64_t seed) {
    std::vector<CheckResult> out;
    std::vector<double> vals(samples.size());
    for (double lambda : lambdas) {
        const double drift = lambda * lambda * lb.width() * lb.width() / (2.0 * subgaussian_k);
        for (std::size_t t = 0; t < samples.size(); ++t)
            vals[t] = std::exp(lambda * samples[t].gap - drift - samples[t].density);
        const Estimate e = mean_and_stderr(vals);
        out.push_back(make_check(std::string(prefix) + "(lambda=" + std::to_string(lambda).substr(0, 4) + ")",
                                 e.value, 1.0, e.std_error, samples.size(), seed));
    }
    return out;
}

}  // namespace detail

/// Task-level exponential inequality at several lambda values from shared draws.
inline std::vector<CheckResult> check_exponential_inequality_task_multi(
    const TaskEnvironment& env, std::size_t n, std::size_t m, const BaseLearnerConfig& cfg,
    std::span<const double> lambdas, std::size_t trials, const RandomStream& rng, unsigned threads = 1,
    const LossBounds& lb = {}) {
    const auto samples = sample_task_exponential(env, n, m, cfg, trials, rng, threads);
    return detail::exponential_checks("task_exp_inequality_n" + std::to_string(n), samples, lambdas,
                                      static_cast<double>(m), lb, rng.seed());
}

inline CheckResult check_exponential_inequality_task(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                                     const BaseLearnerConfig& cfg, double lambda, std::size_t trials,
                                                     const RandomStream& rng, unsigned threads = 1,
                                                     const LossBounds& lb = {}) {
    if (!std::isfinite(lambda)) throw std::invalid_argument("check_exponential_inequality_task: lambda must be finite");
    return check_exponential_inequality_task_multi(env, n, m, cfg, {{lambda}}, trials, rng, threads, lb).front();
}

/// Environment-level exponential inequality at several lambda values from shared draws.
inline std::vector<CheckResult> check_exponential_inequality_env_multi(
    const TaskEnvironment& env, std::size_t n, std::size_t m, const BaseLearnerConfig& cfg,
    std::span<const double> lambdas, std::size_t trials, const RandomStream& rng, unsigned threads = 1,
    const LossBounds& lb = {}) {
    const auto samples = sample_env_exponential(env, n, m, cfg, trials, rng, threads);
    return detail::exponential_checks("env_exp_inequality_n" + std::to_string(n), samples, lambdas,
                                      static_cast<double>(n), lb, rng.seed());
}

inline CheckResult check_exponential_inequality_env(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                                    const BaseLearnerConfig& cfg, double lambda, std::size_t trials,
                                                    const RandomStream& rng, unsigned threads = 1,
                                                    const LossBounds& lb = {}) {
    if (!std::isfinite(lambda)) throw std::invalid_argument("check_exponential_inequality_env: lambda must be finite");
    return check_exponential_inequality_env_multi(env, n, m, cfg, {{lambda}}, trials, rng, threads, lb).front();
}

/**
 * Monte-Carlo check of the gap decomposition: the directly estimated average
 * meta-generalization gap must agree with the sum of the supersample-form
 * within-task and environment-level terms. Sampling is matched (one coupled
 * draw per trial), so the difference has far less variance than either side.
 */
inline CheckResult check_decomposition(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                       const BaseLearnerConfig& cfg, std::size_t trials, const RandomStream& rng,
                                       unsigned threads = 1) {
    if (trials < 2) throw std::invalid_argument("check_decomposition: need at least 2 trials");
    auto diffs = run_trials<double>(trials, threads, [&](std::size_t t) {
        RandomStream r = rng.substream(t);
        const MetaSupersample ss = build_meta_supersample(env, n, m, r);
        const Selection sel = sample_selection(n, m, r);
        const auto train = meta_training_set(ss, sel);
        const Hyperparameter u = meta_learn(train);

        const double lhs = meta_generalization_loss_exact(u, env, m, cfg) - meta_training_loss(u, train, cfg);

        double within = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = ss.row(training_row_index0(i, sel.r[i] ^ 1, n));
            const ModelWeight w = base_learn(cfg, select_samples(row, sel.s_row(i)), u);
            within += within_task_gap_hat(w, ss, sel.r[i] ^ 1, sel.s_row(i), i);
        }
        within /= static_cast<double>(n);
        const double env_gap = env_level_gap_tilde(u, ss, sel, cfg);
        return lhs - (within + env_gap);
    });
    const Estimate e = mean_and_stderr(diffs);
    return make_check("decomposition_mc_n" + std::to_string(n) + "_m" + std::to_string(m), std::abs(e.value), 0.0,
                      e.std_error, trials, rng.seed());
}

/// Both sides of the decomposition identity under full enumeration.
struct DecompositionSides {
    double lhs = 0.0;  // E[L(U) - meta-training loss]
    double rhs = 0.0;  // within-task term + environment-level term
};

/**
 * Exact decomposition check: enumerate every supersample realization of the
 * environment and every selection configuration, and evaluate both sides of
 * the identity as weighted sums. Feasible at N=2, M=2 desk scale.
 */
inline DecompositionSides decomposition_sides_exact(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                                    const BaseLearnerConfig& cfg) {
    const std::size_t sel_bits = n * (m + 1);
    if (sel_bits > 16) throw std::invalid_argument("decomposition_sides_exact: selection space too large");
    const double sel_w = 1.0 / static_cast<double>(std::uint64_t(1) << sel_bits);
    const std::uint64_t mask_m = (std::uint64_t(1) << m) - 1;
    const double a = cfg.alpha_real();
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);

    // Training loss of the retrained base-learner on a dataset with sample
    // mean d: (w - d)^2 + d(1-d) with w = alpha*d + (1-alpha)*u.
    const auto retrained_loss = [&](double d, double u) {
        const double w = a * d + (1.0 - a) * u;
        return (w - d) * (w - d) + d * (1.0 - d);
    };

    long double lhs = 0.0L;
    long double rhs = 0.0L;
    enumeration::for_each_weighted_supersample(env, n, m, [&](const MetaSupersample& ss, double weight) {
        const auto counts = enumeration::detail::count_tables(ss);
        double lhs_ss = 0.0;
        double rhs_ss = 0.0;
        for (std::uint64_t sel = 0; sel < (std::uint64_t(1) << sel_bits); ++sel) {
            int total = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint8_t r_i = (sel >> i) & 1u;
                const std::uint64_t s_i = (sel >> (n + i * m)) & mask_m;
                total += counts[training_row_index0(i, r_i, n)][s_i];
            }
            const double u = static_cast<double>(total) / (nd * md);

            double train_loss = 0.0;
            double comp_loss = 0.0;
            double within = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::uint8_t r_i = (sel >> i) & 1u;
                const std::uint64_t s_i = (sel >> (n + i * m)) & mask_m;
                const std::uint64_t s_bar = ~s_i & mask_m;
                const std::size_t sel_row = training_row_index0(i, r_i, n);
                const std::size_t comp_row = training_row_index0(i, r_i ^ 1, n);

                train_loss += retrained_loss(static_cast<double>(counts[sel_row][s_i]) / md, u);
                comp_loss += retrained_loss(static_cast<double>(counts[comp_row][s_bar]) / md, u);

                const double d_tr = static_cast<double>(counts[comp_row][s_i]) / md;
                const double d_te = static_cast<double>(counts[comp_row][s_bar]) / md;
                const double w = a * d_tr + (1.0 - a) * u;
                within += (w - d_te) * (w - d_te) + d_te * (1.0 - d_te) - ((w - d_tr) * (w - d_tr) + d_tr * (1.0 - d_tr));
            }
            train_loss /= nd;
            comp_loss /= nd;
            within /= nd;

            lhs_ss += meta_generalization_loss_exact(Hyperparameter(u), env, m, cfg) - train_loss;
            rhs_ss += within + (comp_loss - train_loss);
        }
        lhs += static_cast<long double>(weight) * sel_w * lhs_ss;
        rhs += static_cast<long double>(weight) * sel_w * rhs_ss;
    });
    return {static_cast<double>(lhs), static_cast<double>(rhs)};
}

inline CheckResult check_decomposition_exact(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                             const BaseLearnerConfig& cfg) {
    const DecompositionSides sides = decomposition_sides_exact(env, n, m, cfg);
    return make_check("decomposition_exact_n" + std::to_string(n) + "_m" + std::to_string(m),
                      std::abs(sides.lhs - sides.rhs), 1e-12, 0.0, 0, 0);
}

/**
 * Enumeration check of the premises behind the subgaussian step: both gap
 * variables have exact zero mean under the selection distribution, stay in
 * [-(b-a), b-a], and their enumerated moment generating functions respect
 * exp(lambda^2 (b-a)^2 / (2k)) for k = M (task) and k = N (environment).
 */
inline CheckResult check_zero_mean_and_range(const TaskEnvironment& env, std::size_t n, std::size_t m,
                                             const BaseLearnerConfig& cfg, std::size_t instances,
                                             const RandomStream& rng, const LossBounds& lb = {}) {
    if (m > 20 || n * (m + 1) > 22)
        throw std::invalid_argument("check_zero_mean_and_range: instance too large to enumerate");
    const double width = lb.width();
    static constexpr double lambdas[] = {-3.0, -2.0, -1.0, 1.0, 2.0, 3.0};
    double violation = 0.0;
    RandomStream root = rng.substream(0);
    for (std::size_t inst = 0; inst < instances; ++inst) {
        RandomStream r = root.substream(inst);
        const MetaSupersample ss = build_meta_supersample(env, n, m, r);

        // Within-task gap over all 2^M selections at fixed (w, supersample, r_i).
        const double w = r.uniform01();
        const std::size_t i = r.uniform_index(n);
        const std::uint8_t r_i = r.fair_bit();
        std::vector<double> gaps;
        gaps.reserve(std::size_t(1) << m);
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << m); ++mask)
            gaps.push_back(within_task_gap_hat(w, ss, r_i, detail::mask_bits(mask, m), i));
        double mean = 0.0;
        for (double g : gaps) mean += g;
        mean /= static_cast<double>(gaps.size());
        violation = std::max(violation, std::abs(mean));
        for (double g : gaps) violation = std::max(violation, std::abs(g) - width);
        for (double lambda : lambdas) {
            double mgf = 0.0;
            for (double g : gaps) mgf += std::exp(lambda * g);
            mgf /= static_cast<double>(gaps.size());
            violation =
                std::max(violation, mgf - std::exp(lambda * lambda * width * width / (2.0 * static_cast<double>(m))));
        }

        // Environment-level gap over all selections at fixed (u, supersample).
        const Hyperparameter u(r.uniform01());
        const std::size_t sel_bits = n * (m + 1);
        const std::uint64_t mask_m = (std::uint64_t(1) << m) - 1;
        std::vector<double> env_gaps;
        env_gaps.reserve(std::size_t(1) << sel_bits);
        for (std::uint64_t bits = 0; bits < (std::uint64_t(1) << sel_bits); ++bits) {
            std::vector<std::uint8_t> rv(n), sv(n * m);
            for (std::size_t k = 0; k < n; ++k) {
                rv[k] = (bits >> k) & 1u;
                const std::uint64_t s_k = (bits >> (n + k * m)) & mask_m;
                for (std::size_t j = 0; j < m; ++j) sv[k * m + j] = (s_k >> j) & 1u;
            }
            env_gaps.push_back(env_level_gap_tilde(u, ss, Selection(n, m, std::move(rv), std::move(sv)), cfg));
        }
        double env_mean = 0.0;
        for (double g : env_gaps) env_mean += g;
        env_mean /= static_cast<double>(env_gaps.size());
        violation = std::max(violation, std::abs(env_mean));
        for (double g : env_gaps) violation = std::max(violation, std::abs(g) - width);
        for (double lambda : lambdas) {
            double mgf = 0.0;
            for (double g : env_gaps) mgf += std::exp(lambda * g);
            mgf /= static_cast<double>(env_gaps.size());
            violation =
                std::max(violation, mgf - std::exp(lambda * lambda * width * width / (2.0 * static_cast<double>(n))));
        }
    }
    return make_check("zero_mean_range_mgf", violation, 1e-12, 0.0, instances, rng.seed());
}

/**
 * The closed square-root form used by the bound assembly must equal the
 * infimum over lambda of the pre-optimization bound
 * lambda (b-a)^2 / (2k) + I / lambda, up to the resolution of a log-spaced
 * lambda grid (and can never exceed any grid value from below).
 */
inline CheckResult check_lambda_optimization(const LossBounds& lb = {}) {
    static constexpr double cmis[] = {0.01, 0.1, 0.5, 1.0, 2.0};
    static constexpr double ks[] = {1.0, 2.0, 5.0, 10.0, 20.0};
    constexpr int grid_points = 200;
    const double width2 = lb.width() * lb.width();
    double statistic = 0.0;
    for (double cmi : cmis) {
        for (double k : ks) {
            const double closed = std::sqrt(2.0 * width2 * cmi / k);
            double grid_min = std::numeric_limits<double>::infinity();
            for (int g = 0; g < grid_points; ++g) {
                const double lambda =
                    std::pow(10.0, -3.0 + 6.0 * static_cast<double>(g) / static_cast<double>(grid_points - 1));
                grid_min = std::min(grid_min, lambda * width2 / (2.0 * k) + cmi / lambda);
            }
            // The grid can never beat the closed form; a dip below is a logic error.
            if (grid_min < closed - 1e-12) return make_check("lambda_grid_optimization", 1.0, 2e-3, 0.0, 0, 0);
            statistic = std::max(statistic, (grid_min - closed) / closed);
        }
    }
    return make_check("lambda_grid_optimization", statistic, 2e-3, 0.0, 0, 0);
}

/**
 * The default validation battery: exponential inequalities at both levels for
 * lambda in {-2,-1,0,1,2} and N in {2,5}, the change-of-measure equality at
 * lambda=0 on a degenerate (full-support) environment, the decomposition
 * identity (Monte-Carlo at N=10 plus exact enumeration at N=2, M=2), the
 * zero-mean/range/MGF enumeration, and the lambda-grid optimization check.
 */
inline std::vector<CheckResult> run_default_checks(const TaskEnvironment& env, std::size_t m,
                                                   const BaseLearnerConfig& cfg, std::size_t trials,
                                                   std::uint64_t seed, unsigned threads = 1) {
    static constexpr double lambdas[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
    std::vector<CheckResult> out;
    const RandomStream root(seed);
    std::uint64_t stream = 0;
    for (std::size_t n : {std::size_t(2), std::size_t(5)}) {
        for (auto& c : check_exponential_inequality_task_multi(env, n, m, cfg, lambdas, trials,
                                                               root.substream(stream++), threads))
            out.push_back(std::move(c));
        for (auto& c :
             check_exponential_inequality_env_multi(env, n, m, cfg, lambdas, trials, root.substream(stream++), threads))
            out.push_back(std::move(c));
    }

    // Degenerate environment: single-atom channel, so the lambda=0 statistic
    // is the change-of-measure identity and must equal 1 exactly.
    const TaskEnvironment degenerate({1.0}, {0.0});
    {
        const auto samples = sample_task_exponential(degenerate, 2, m, cfg, 256, root.substream(stream++), threads);
        std::vector<double> vals(samples.size());
        for (std::size_t t = 0; t < samples.size(); ++t) vals[t] = std::exp(-samples[t].density);
        const Estimate e = mean_and_stderr(vals);
        out.push_back(make_check("change_of_measure_task_full_support", std::abs(e.value - 1.0), 1e-12, e.std_error,
                                 samples.size(), seed));
    }
    {
        const auto samples = sample_env_exponential(degenerate, 2, m, cfg, 256, root.substream(stream++), threads);
        std::vector<double> vals(samples.size());
        for (std::size_t t = 0; t < samples.size(); ++t) vals[t] = std::exp(-samples[t].density);
        const Estimate e = mean_and_stderr(vals);
        out.push_back(make_check("change_of_measure_env_full_support", std::abs(e.value - 1.0), 1e-12, e.std_error,
                                 samples.size(), seed));
    }

    out.push_back(check_decomposition(env, 10, m, cfg, trials, root.substream(stream++), threads));
    out.push_back(check_decomposition_exact(TaskEnvironment({0.5, 0.5}, {0.3, 0.7}), 2, 2, cfg));
    out.push_back(check_zero_mean_and_range(env, 2, m, cfg, 20, root.substream(stream++)));
    out.push_back(check_lambda_optimization());
    return out;
}

}  // namespace metacmi
