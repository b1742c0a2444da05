#include <doctest.h>

#include <cmath>

#include "metacmi/experiments.hpp"
#include "metacmi/losses.hpp"
#include "oracles.hpp"

using namespace metacmi;

namespace {
const std::vector<double> kStudyProbs = {0.05, 0.1, 0.02, 0.2, 0.01, 0.05, 0.02, 0.15, 0.1, 0.3};

TaskEnvironment study_env() {
    std::vector<double> means(10);
    for (std::size_t i = 0; i < 10; ++i) means[i] = static_cast<double>(i + 1) / 11.0;
    return TaskEnvironment(kStudyProbs, means);
}
}  // namespace

TEST_SUITE("losses") {

TEST_CASE("squared loss basics") {
    CHECK(loss(0.5, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(loss(1.0, 1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(loss(0.4, 1) == doctest::Approx(0.36).epsilon(1e-15));
}

TEST_CASE("training loss") {
    CHECK(training_loss(0.0, Dataset({0, 0, 0})) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(training_loss(0.5, Dataset({0, 1})) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(training_loss(0.4, Dataset({1, 1, 0, 0, 1})) == doctest::Approx(0.28).epsilon(1e-14));
    CHECK_THROWS_AS(training_loss(0.5, Dataset{}), std::invalid_argument);
}

TEST_CASE("per-task generalization loss closed form and MC oracle") {
    CHECK(per_task_generalization_loss(0.5, 0.5) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(per_task_generalization_loss(0.0, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(per_task_generalization_loss(0.3, 0.6) == doctest::Approx(0.33).epsilon(1e-14));

    RandomStream rng(77);
    constexpr std::size_t draws = 10'000'000;
    long double acc = 0.0L, acc2 = 0.0L;
    for (std::size_t i = 0; i < draws; ++i) {
        const double l = loss(0.3, rng.bernoulli(0.6) ? 1 : 0);
        acc += l;
        acc2 += l * l;
    }
    const double mean = static_cast<double>(acc / draws);
    const double var = static_cast<double>(acc2 / draws) - mean * mean;
    CHECK(std::abs(mean - 0.33) <= 3.0 * std::sqrt(var / draws));
}

TEST_CASE("average per-task training loss") {
    const Dataset d({1, 0, 1, 0, 1});
    // alpha = 1 ignores the bias point.
    const BaseLearnerConfig a1(Rational(1, 1));
    CHECK(avg_per_task_training_loss(Hyperparameter(0.1), d, a1) ==
          doctest::Approx(avg_per_task_training_loss(Hyperparameter(0.9), d, a1)).epsilon(1e-15));
    CHECK(avg_per_task_training_loss(Hyperparameter(0.0), Dataset({0, 0, 0}), BaseLearnerConfig()) ==
          doctest::Approx(0.0).epsilon(1e-15));
    CHECK(avg_per_task_training_loss(Hyperparameter(0.2), d, BaseLearnerConfig(Rational(1, 2))) ==
          doctest::Approx(0.28).epsilon(1e-14));
}

TEST_CASE("meta training loss") {
    const BaseLearnerConfig cfg(Rational(1, 2));
    const Dataset d({1, 0, 1});
    CHECK(meta_training_loss(Hyperparameter(0.3), std::vector<Dataset>{d}, cfg) ==
          doctest::Approx(avg_per_task_training_loss(Hyperparameter(0.3), d, cfg)).epsilon(1e-15));
    CHECK(meta_training_loss(Hyperparameter(0.3), std::vector<Dataset>{d, d, d}, cfg) ==
          doctest::Approx(avg_per_task_training_loss(Hyperparameter(0.3), d, cfg)).epsilon(1e-15));

    // Independent double-sum re-implementation.
    RandomStream rng(21);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 1 + rng.uniform_index(5);
        const std::size_t m = 1 + rng.uniform_index(5);
        const BaseLearnerConfig c(Rational(static_cast<std::int64_t>(rng.uniform_index(11)), 10));
        const Hyperparameter u(rng.uniform01());
        std::vector<Dataset> datasets(n);
        for (auto& ds : datasets) {
            ds.samples.resize(m);
            for (auto& z : ds.samples) z = rng.fair_bit();
        }
        long double direct = 0.0L;
        for (const auto& ds : datasets) {
            const double w = c.alpha_real() * ds.mean() + (1.0 - c.alpha_real()) * u.u;
            for (auto z : ds.samples) direct += (w - z) * (w - z);
        }
        direct /= static_cast<long double>(n * m);
        CHECK(std::abs(meta_training_loss(u, datasets, c) - static_cast<double>(direct)) <= 1e-14);
    }
}

TEST_CASE("exact meta-generalization loss: special cases") {
    const TaskEnvironment env = study_env();
    // alpha = 1 kills the u term.
    const BaseLearnerConfig a1(Rational(1, 1));
    const double l1 = meta_generalization_loss_exact(Hyperparameter(0.1), env, 5, a1);
    CHECK(l1 == doctest::Approx(meta_generalization_loss_exact(Hyperparameter(0.9), env, 5, a1)).epsilon(1e-15));
    double expect = 0.0;
    for (std::size_t t = 0; t < env.task_count(); ++t)
        expect += env.task_prob(t) * env.task_mean(t) * (1.0 - env.task_mean(t)) * (1.0 + 1.0 / 5.0);
    CHECK(l1 == doctest::Approx(expect).epsilon(1e-14));

    const TaskEnvironment single({1.0}, {0.0});
    for (double u : {0.0, 0.3, 1.0})
        CHECK(meta_generalization_loss_exact(Hyperparameter(u), single, 4, BaseLearnerConfig(Rational(1, 2))) ==
              doctest::Approx(0.25 * u * u).epsilon(1e-14));
}

TEST_CASE("exact meta-generalization loss agrees with raw-sample MC") {
    const TaskEnvironment env = study_env();
    const BaseLearnerConfig cfg(Rational(1, 2));
    const Hyperparameter u(0.5);
    constexpr std::size_t m = 5;
    constexpr std::size_t trials = 1'000'000;
    RandomStream rng(55);
    long double acc = 0.0L, acc2 = 0.0L;
    for (std::size_t i = 0; i < trials; ++i) {
        const TaskId task = sample_task(env, rng);
        const Dataset d = sample_dataset(env, task, m, rng);
        const double w = base_learn(cfg, d, u);
        const double l = loss(w, rng.bernoulli(env.task_mean(task)) ? 1 : 0);  // fresh test sample
        acc += l;
        acc2 += l * l;
    }
    const double mean = static_cast<double>(acc / trials);
    const double var = static_cast<double>(acc2 / trials) - mean * mean;
    const double closed = meta_generalization_loss_exact(u, env, m, cfg);
    CHECK(std::abs(mean - closed) <= 3.0 * std::sqrt(var / trials));
}

TEST_CASE("within-task gap: hand instance, zero mean, range") {
    // Row (1,0,0,1) on the r=0 row of a 1-task supersample; s=(0,1) selects
    // (Z1, Z4) = (1,1) for training, complement picks (0,0).
    const MetaSupersample ss(1, 2, {1, 0, 0, 1, 0, 0, 0, 0}, {0, 0});
    const std::vector<std::uint8_t> s01 = {0, 1};
    CHECK(within_task_gap_hat(0.5, ss, 0, s01, 0) == doctest::Approx(0.0).epsilon(1e-15));

    const MetaSupersample equal_rows(1, 2, {1, 1, 1, 1, 0, 1, 0, 1}, {0, 0});
    for (std::uint64_t mask = 0; mask < 4; ++mask) {
        const std::vector<std::uint8_t> bits = {static_cast<std::uint8_t>(mask & 1),
                                                static_cast<std::uint8_t>((mask >> 1) & 1)};
        CHECK(within_task_gap_hat(0.7, equal_rows, 0, bits, 0) == doctest::Approx(0.0).epsilon(1e-15));
    }

    RandomStream rng(8);
    const TaskEnvironment env({0.5, 0.5}, {0.25, 0.75});
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 1 + rng.uniform_index(3);
        const std::size_t m = 1 + rng.uniform_index(5);
        const MetaSupersample ss2 = build_meta_supersample(env, n, m, rng);
        const double w = rng.uniform01();
        const std::size_t i = rng.uniform_index(n);
        const std::uint8_t r_i = rng.fair_bit();
        long double mean = 0.0L;
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << m); ++mask) {
            std::vector<std::uint8_t> bits(m);
            for (std::size_t j = 0; j < m; ++j) bits[j] = (mask >> j) & 1u;
            const double g = within_task_gap_hat(w, ss2, r_i, bits, i);
            CHECK(std::abs(g) <= 1.0 + 1e-15);
            mean += g;
        }
        mean /= static_cast<long double>(std::uint64_t(1) << m);
        CHECK(std::abs(static_cast<double>(mean)) <= 1e-14);
    }
}

TEST_CASE("environment-level gap: antisymmetry and zero mean") {
    RandomStream rng(12);
    const BaseLearnerConfig cfg(Rational(1, 2));
    const TaskEnvironment env({0.5, 0.5}, {0.25, 0.75});

    const MetaSupersample all_ones(2, 2, std::vector<std::uint8_t>(16, 1), {0, 0, 0, 0});
    const Selection sel0 = sample_selection(2, 2, rng);
    CHECK(env_level_gap_tilde(Hyperparameter(0.4), all_ones, sel0, cfg) == doctest::Approx(0.0).epsilon(1e-15));

    for (int rep = 0; rep < 25; ++rep) {
        const MetaSupersample ss = build_meta_supersample(env, 2, 2, rng);
        const Selection sel = sample_selection(2, 2, rng);
        const Hyperparameter u(rng.uniform01());
        CHECK(env_level_gap_tilde(u, ss, sel, cfg) ==
              doctest::Approx(-env_level_gap_tilde(u, ss, sel.complement(), cfg)).epsilon(1e-12));
    }

    // Full enumeration of all 2^{N(M+1)} selections at N=2, M=2.
    const MetaSupersample ss = build_meta_supersample(env, 2, 2, rng);
    const Hyperparameter u(rng.uniform01());
    long double mean = 0.0L;
    for (std::uint64_t bits = 0; bits < 64; ++bits) {
        std::vector<std::uint8_t> rv = {static_cast<std::uint8_t>(bits & 1), static_cast<std::uint8_t>((bits >> 1) & 1)};
        std::vector<std::uint8_t> sv(4);
        for (std::size_t k = 0; k < 4; ++k) sv[k] = (bits >> (2 + k)) & 1u;
        const double g = env_level_gap_tilde(u, ss, Selection(2, 2, rv, sv), cfg);
        CHECK(std::abs(g) <= 1.0 + 1e-15);
        mean += g;
    }
    CHECK(std::abs(static_cast<double>(mean / 64.0L)) <= 1e-14);
}

TEST_CASE("true average meta gap: degenerate and plug-in cases") {
    const BaseLearnerConfig cfg(Rational(1, 2));
    const TaskEnvironment deterministic({1.0}, {0.0});
    const Estimate zero = true_avg_meta_gap_mc(deterministic, 3, 4, cfg, 200, RandomStream(5));
    CHECK(zero.value == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(zero.std_error == doctest::Approx(0.0).epsilon(1e-15));

    // alpha = 0 with a constant bias point: W never depends on the data.
    const TaskEnvironment env = study_env();
    const ConstantMetaLearner constant(0.4);
    const Estimate gap =
        true_avg_meta_gap_mc(env, 5, 4, BaseLearnerConfig(Rational(0, 1)), 20000, RandomStream(6), 1, &constant);
    CHECK(std::abs(gap.value) <= 3.0 * gap.std_error);
}

TEST_CASE("true average meta gap matches the closed-form difference") {
    const TaskEnvironment env = study_env();
    const BaseLearnerConfig cfg(Rational(1, 2));
    constexpr std::size_t n = 10, m = 5;
    const Estimate gap = true_avg_meta_gap_mc(env, n, m, cfg, 100'000, RandomStream(91));
    const double closed_gap = expected_meta_loss_closed_form(env, n, m, cfg.alpha_real()) -
                              oracles::expected_meta_training_loss_closed_form(env, n, m, cfg.alpha_real());
    CHECK(std::abs(gap.value - closed_gap) <= 3.0 * gap.std_error);
}

}  // TEST_SUITE
