#include <doctest.h>

#include <cmath>

#include "metacmi/environment.hpp"
#include "metacmi/random.hpp"

using namespace metacmi;

namespace {
const std::vector<double> kStudyProbs = {0.05, 0.1, 0.02, 0.2, 0.01, 0.05, 0.02, 0.15, 0.1, 0.3};
}

TEST_SUITE("environment") {

TEST_CASE("construction validates inputs") {
    CHECK_THROWS_AS(TaskEnvironment({0.5, 0.4}, {0.1, 0.2}), std::invalid_argument);   // sums to 0.9
    CHECK_THROWS_AS(TaskEnvironment({-0.5, 1.5}, {0.1, 0.2}), std::invalid_argument);  // negative prob
    CHECK_THROWS_AS(TaskEnvironment({0.5, 0.5}, {0.1, 1.2}), std::invalid_argument);   // mean out of range
    CHECK_THROWS_AS(TaskEnvironment({1.0}, {0.1, 0.2}), std::invalid_argument);        // length mismatch
    CHECK_THROWS_AS(TaskEnvironment({}, {}), std::invalid_argument);
    CHECK_NOTHROW(TaskEnvironment(kStudyProbs, std::vector<double>(10, 0.5)));
}

TEST_CASE("degenerate task distribution always yields task 0") {
    const TaskEnvironment env({1.0}, {0.3});
    RandomStream rng(7);
    for (int i = 0; i < 1000; ++i) CHECK(sample_task(env, rng) == 0);
}

TEST_CASE("task frequencies match the study distribution at 1e6 draws") {
    const TaskEnvironment env(kStudyProbs, std::vector<double>(10, 0.5));
    RandomStream rng(42);
    constexpr std::size_t draws = 1'000'000;
    std::vector<std::size_t> hits(env.task_count(), 0);
    for (std::size_t i = 0; i < draws; ++i) ++hits[sample_task(env, rng)];

    double chi2 = 0.0;
    for (std::size_t t = 0; t < env.task_count(); ++t) {
        const double p = env.task_prob(t);
        const double freq = static_cast<double>(hits[t]) / draws;
        CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1.0 - p) / draws));
        const double expected = p * draws;
        chi2 += (hits[t] - expected) * (hits[t] - expected) / expected;
    }
    CHECK(chi2 < 27.877);  // 99.9% critical value, 9 degrees of freedom
}

TEST_CASE("seeded draws are reproducible") {
    const TaskEnvironment env({0.5, 0.5}, {0.2, 0.8});
    RandomStream a(123), b(123);
    for (int i = 0; i < 200; ++i) CHECK(sample_task(env, a) == sample_task(env, b));
    RandomStream c(123), d(124);
    bool any_diff = false;
    for (int i = 0; i < 200; ++i) any_diff |= sample_task(env, c) != sample_task(env, d);
    CHECK(any_diff);
}

TEST_CASE("datasets from degenerate Bernoulli means") {
    RandomStream rng(5);
    const TaskEnvironment env({0.5, 0.5}, {0.0, 1.0});
    for (auto z : sample_dataset(env, 0, 16, rng).samples) CHECK(z == 0);
    for (auto z : sample_dataset(env, 1, 16, rng).samples) CHECK(z == 1);
    CHECK_THROWS_AS(sample_dataset(env, 2, 4, rng), std::out_of_range);
    CHECK_THROWS_AS(sample_dataset(env, 0, 0, rng), std::invalid_argument);
}

TEST_CASE("dataset sample mean converges to mu") {
    const TaskEnvironment env({1.0}, {0.3});
    RandomStream rng(9);
    constexpr std::size_t datasets = 1'000'000;
    constexpr std::size_t m = 5;
    double acc = 0.0;
    for (std::size_t i = 0; i < datasets; ++i) acc += sample_dataset(env, 0, m, rng).mean();
    const double mean = acc / datasets;
    CHECK(std::abs(mean - 0.3) <= 3.0 * std::sqrt(0.3 * 0.7 / (m * datasets)));
}

TEST_CASE("environment moments: closed cases") {
    {
        const TaskEnvironment env({0.25, 0.25, 0.5}, {0.5, 0.5, 0.5});
        const auto mom = environment_moments(env);
        CHECK(mom.mean_of_means == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(mom.var_of_means == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(mom.mean_bernoulli_var == doctest::Approx(0.25).epsilon(1e-14));
    }
    {
        const TaskEnvironment env({1.0}, {0.2});
        const auto mom = environment_moments(env);
        CHECK(mom.mean_of_means == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(mom.var_of_means == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(mom.mean_bernoulli_var == doctest::Approx(0.16).epsilon(1e-14));
    }
    {
        const TaskEnvironment env({0.5, 0.5}, {0.2, 0.8});
        const auto mom = environment_moments(env);
        CHECK(mom.mean_of_means == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(mom.var_of_means == doctest::Approx(0.09).epsilon(1e-14));
        CHECK(mom.mean_bernoulli_var == doctest::Approx(0.16).epsilon(1e-14));
    }
}

TEST_CASE("environment moments match brute-force weighted sums") {
    RandomStream rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t k = 1 + rng.uniform_index(8);
        std::vector<double> probs(k), means(k);
        double sum = 0.0;
        for (auto& p : probs) sum += (p = 0.05 + rng.uniform01());
        for (auto& p : probs) p /= sum;
        // Renormalize exactly so the validated invariant holds.
        double carry = 1.0;
        for (std::size_t i = 0; i + 1 < k; ++i) carry -= probs[i];
        probs[k - 1] = carry;
        for (auto& mu : means) mu = rng.uniform01();

        const TaskEnvironment env(probs, means);
        const auto mom = environment_moments(env);
        long double mean = 0.0L, var = 0.0L, bvar = 0.0L;
        for (std::size_t t = 0; t < k; ++t) mean += static_cast<long double>(probs[t]) * means[t];
        for (std::size_t t = 0; t < k; ++t) {
            var += static_cast<long double>(probs[t]) * (means[t] - mean) * (means[t] - mean);
            bvar += static_cast<long double>(probs[t]) * means[t] * (1.0L - means[t]);
        }
        CHECK(std::abs(mom.mean_of_means - static_cast<double>(mean)) <= 1e-14);
        CHECK(std::abs(mom.var_of_means - static_cast<double>(var)) <= 1e-14);
        CHECK(std::abs(mom.mean_bernoulli_var - static_cast<double>(bvar)) <= 1e-14);
    }
}

}  // TEST_SUITE
