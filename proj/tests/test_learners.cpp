#include <doctest.h>

#include <algorithm>

#include "metacmi/learners.hpp"
#include "metacmi/losses.hpp"
#include "oracles.hpp"

using namespace metacmi;

TEST_SUITE("learners") {

TEST_CASE("base learner blends sample mean and bias point") {
    const Dataset d({1, 0, 1, 0, 1});  // mean 0.6
    CHECK(base_learn(BaseLearnerConfig(Rational(1, 2)), d, Hyperparameter(0.2)) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(base_learn(BaseLearnerConfig(Rational(1, 1)), d, Hyperparameter(0.9)) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(base_learn(BaseLearnerConfig(Rational(0, 1)), d, Hyperparameter(0.9)) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK_THROWS_AS(base_learn(BaseLearnerConfig(), Dataset{}, Hyperparameter(0.5)), std::invalid_argument);
}

TEST_CASE("config and hyperparameter ranges are enforced") {
    CHECK_THROWS_AS(BaseLearnerConfig(Rational(3, 2)), std::invalid_argument);
    CHECK_THROWS_AS(BaseLearnerConfig(Rational(-1, 4)), std::invalid_argument);
    CHECK_THROWS_AS(Hyperparameter(1.5), std::invalid_argument);
    CHECK_THROWS_AS(Hyperparameter(-0.1), std::invalid_argument);
}

TEST_CASE("base learner output stays in [0,1]") {
    RandomStream rng(3);
    for (int rep = 0; rep < 500; ++rep) {
        const BaseLearnerConfig cfg(Rational(static_cast<std::int64_t>(rng.uniform_index(11)), 10));
        Dataset d;
        d.samples.resize(1 + rng.uniform_index(8));
        for (auto& z : d.samples) z = rng.fair_bit();
        const double w = base_learn(cfg, d, Hyperparameter(rng.uniform01()));
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
    }
}

TEST_CASE("meta learner closed cases") {
    CHECK(meta_learn(std::vector<Dataset>{Dataset({1, 1}), Dataset({0, 0})}).u == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(meta_learn(std::vector<Dataset>{Dataset({0, 0, 0}), Dataset({0, 0, 0})}).u == 0.0);
    CHECK_THROWS_AS(meta_learn(std::vector<Dataset>{}), std::invalid_argument);
}

TEST_CASE("meta learner beats a dense hyperparameter grid") {
    RandomStream rng(11);
    for (int rep = 0; rep < 40; ++rep) {
        const BaseLearnerConfig cfg(Rational(static_cast<std::int64_t>(rng.uniform_index(11)), 10));
        const std::size_t n = 1 + rng.uniform_index(6);
        const std::size_t m = 1 + rng.uniform_index(6);
        std::vector<Dataset> datasets(n);
        for (auto& d : datasets) {
            d.samples.resize(m);
            for (auto& z : d.samples) z = rng.fair_bit();
        }
        const Hyperparameter u = meta_learn(datasets);
        CHECK(meta_training_loss(u, datasets, cfg) <= oracles::grid_best_meta_training_loss(datasets, cfg) + 1e-12);
    }
}

TEST_CASE("task and sample order do not matter") {
    RandomStream rng(13);
    const BaseLearnerConfig cfg(Rational(1, 2));
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<Dataset> datasets(3);
        for (auto& d : datasets) {
            d.samples.resize(4);
            for (auto& z : d.samples) z = rng.fair_bit();
        }
        auto shuffled = datasets;
        std::swap(shuffled[0], shuffled[2]);
        std::reverse(shuffled[1].samples.begin(), shuffled[1].samples.end());
        CHECK(meta_learn(datasets).u == doctest::Approx(meta_learn(shuffled).u).epsilon(1e-15));
        CHECK(base_learn(cfg, datasets[1], Hyperparameter(0.3)) ==
              doctest::Approx(base_learn(cfg, shuffled[1], Hyperparameter(0.3))).epsilon(1e-15));
    }
}

TEST_CASE("meta learner plugins") {
    RandomStream rng(1);
    const std::vector<Dataset> datasets = {Dataset({1, 1}), Dataset({0, 0})};
    CHECK(GrandMeanMetaLearner{}.learn(datasets, rng).u == doctest::Approx(0.5));
    CHECK(ConstantMetaLearner(0.25).learn(datasets, rng).u == doctest::Approx(0.25));
}

}  // TEST_SUITE
