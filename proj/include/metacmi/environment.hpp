#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "metacmi/random.hpp"

namespace metacmi {

using TaskId = std::size_t;

/// A dataset of binary samples drawn for one task.
struct Dataset {
    std::vector<std::uint8_t> samples;

    Dataset() = default;
    explicit Dataset(std::vector<std::uint8_t> s) : samples(std::move(s)) {
        for (auto v : samples)
            if (v > 1) throw std::invalid_argument("Dataset: samples must be 0/1");
    }

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }

    [[nodiscard]] double mean() const {
        if (samples.empty()) throw std::invalid_argument("Dataset::mean: empty dataset");
        std::size_t ones = 0;
        for (auto v : samples) ones += v;
        return static_cast<double>(ones) / static_cast<double>(samples.size());
    }
};

/**
 * Finite task environment: a task distribution over |T| tasks and a
 * Bernoulli(mu_tau) data distribution per task. Validated on construction;
 * all sampling helpers below can then assume a well-formed instance.
 */
class TaskEnvironment {
  public:
    TaskEnvironment(std::vector<double> task_probs, std::vector<double> task_means)
        : probs_(std::move(task_probs)), means_(std::move(task_means)) {
        if (probs_.empty()) throw std::invalid_argument("TaskEnvironment: no tasks");
        if (probs_.size() != means_.size())
            throw std::invalid_argument("TaskEnvironment: task_probs and task_means must have equal length");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) throw std::invalid_argument("TaskEnvironment: negative task probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("TaskEnvironment: task_probs must sum to 1");
        for (double mu : means_)
            if (!(mu >= 0.0 && mu <= 1.0))
                throw std::invalid_argument("TaskEnvironment: task means must lie in [0,1]");
    }

    [[nodiscard]] std::size_t task_count() const { return probs_.size(); }
    [[nodiscard]] std::span<const double> task_probs() const { return probs_; }
    [[nodiscard]] std::span<const double> task_means() const { return means_; }
    [[nodiscard]] double task_prob(TaskId t) const { return probs_.at(t); }
    [[nodiscard]] double task_mean(TaskId t) const { return means_.at(t); }

  private:
    std::vector<double> probs_;
    std::vector<double> means_;
};

inline TaskId sample_task(const TaskEnvironment& env, RandomStream& rng) {
    return rng.categorical(env.task_probs());
}

inline Dataset sample_dataset(const TaskEnvironment& env, TaskId task, std::size_t m, RandomStream& rng) {
    if (task >= env.task_count()) throw std::out_of_range("sample_dataset: task id out of range");
    if (m == 0) throw std::invalid_argument("sample_dataset: m must be positive");
    const double mu = env.task_mean(task);
    Dataset d;
    d.samples.resize(m);
    for (std::size_t j = 0; j < m; ++j) d.samples[j] = rng.bernoulli(mu) ? 1 : 0;
    return d;
}

struct EnvironmentMoments {
    double mean_of_means = 0.0;      // sum_tau p_tau mu_tau
    double var_of_means = 0.0;       // sum_tau p_tau (mu_tau - mean)^2
    double mean_bernoulli_var = 0.0; // sum_tau p_tau mu_tau (1 - mu_tau)
};

inline EnvironmentMoments environment_moments(const TaskEnvironment& env) {
    EnvironmentMoments mom;
    for (std::size_t t = 0; t < env.task_count(); ++t)
        mom.mean_of_means += env.task_prob(t) * env.task_mean(t);
    for (std::size_t t = 0; t < env.task_count(); ++t) {
        const double d = env.task_mean(t) - mom.mean_of_means;
        mom.var_of_means += env.task_prob(t) * d * d;
        mom.mean_bernoulli_var += env.task_prob(t) * env.task_mean(t) * (1.0 - env.task_mean(t));
    }
    return mom;
}

}  // namespace metacmi
