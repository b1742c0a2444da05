#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "metacmi/environment.hpp"
#include "metacmi/random.hpp"
#include "metacmi/rational.hpp"

namespace metacmi {

using ModelWeight = double;

/// Shared inductive bias: the bias point of the convex-combination estimator.
struct Hyperparameter {
    double u = 0.0;

    Hyperparameter() = default;
    explicit Hyperparameter(double value) : u(value) {
        if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("Hyperparameter: u must lie in [0,1]");
    }
};

/**
 * Configuration of the convex-combination base-learner W = alpha*D + (1-alpha)*u.
 *
 * alpha is held as an exact rational so the induced model-weight grid
 * (denominator den(alpha)*N*M) stays exact in the finite-distribution
 * pipeline; alpha in [0,1] guarantees W in [0,1] and hence squared loss in [0,1].
 */
struct BaseLearnerConfig {
    Rational alpha = Rational(1, 2);

    BaseLearnerConfig() = default;
    explicit BaseLearnerConfig(Rational a) : alpha(a) {
        if (alpha < Rational(0, 1) || Rational(1, 1) < alpha)
            throw std::invalid_argument("BaseLearnerConfig: alpha must lie in [0,1]");
    }

    [[nodiscard]] double alpha_real() const { return alpha.to_double(); }
};

/// W = alpha * mean(dataset) + (1 - alpha) * u. Deterministic.
inline ModelWeight base_learn(const BaseLearnerConfig& cfg, const Dataset& dataset, const Hyperparameter& u) {
    if (dataset.empty()) throw std::invalid_argument("base_learn: empty dataset");
    const double a = cfg.alpha_real();
    return a * dataset.mean() + (1.0 - a) * u.u;
}

/**
 * The empirical-loss-minimizing hyperparameter for the convex-combination
 * base-learner: U = (1/N) sum_i D_i, the mean of the per-task sample means.
 */
inline Hyperparameter meta_learn(std::span<const Dataset> meta_training) {
    if (meta_training.empty()) throw std::invalid_argument("meta_learn: no datasets");
    double acc = 0.0;
    for (const Dataset& d : meta_training) acc += d.mean();
    return Hyperparameter(acc / static_cast<double>(meta_training.size()));
}

/**
 * Pluggable meta-learner. The random stream lets stochastic learners slot in;
 * the two learners shipped here ignore it.
 */
class MetaLearner {
  public:
    virtual ~MetaLearner() = default;
    [[nodiscard]] virtual Hyperparameter learn(std::span<const Dataset> meta_training, RandomStream& rng) const = 0;
};

class GrandMeanMetaLearner final : public MetaLearner {
  public:
    [[nodiscard]] Hyperparameter learn(std::span<const Dataset> meta_training, RandomStream&) const override {
        return meta_learn(meta_training);
    }
};

class ConstantMetaLearner final : public MetaLearner {
  public:
    explicit ConstantMetaLearner(double u) : u_(u) {}
    [[nodiscard]] Hyperparameter learn(std::span<const Dataset>, RandomStream&) const override { return u_; }

  private:
    Hyperparameter u_;
};

}  // namespace metacmi
