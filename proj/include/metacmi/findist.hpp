#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "metacmi/rational.hpp"

namespace metacmi {

/**
 * Probability mass function on a finite grid of rational values: atoms are
 * integer numerators over one common denominator, probabilities are doubles.
 *
 * Keeping atom values exact is what makes the entropy/CMI pipeline reliable:
 * two construction routes that produce the same model weight collide on the
 * same atom instead of splitting it over float noise, which entropy would
 * amplify. Instances are canonical (common factor of denominator and all
 * numerators divided out, atoms strictly increasing, zero-probability atoms
 * dropped), so equal distributions have equal representations.
 */
class FiniteDistribution {
  public:
    /// Grid guard: operations whose result needs a denominator beyond this throw.
    static constexpr std::int64_t max_denominator = std::int64_t(1) << 40;

    /// Point mass at 0.
    FiniteDistribution() : den_(1), nums_{0}, probs_{1.0} {}

    static FiniteDistribution point_mass(const Rational& v) {
        return FiniteDistribution(v.den, {{v.num, 1.0}});
    }

    /// Build from (numerator, probability) pairs over a common denominator.
    FiniteDistribution(std::int64_t den, const std::map<std::int64_t, double>& atoms) {
        if (den <= 0) throw std::invalid_argument("FiniteDistribution: denominator must be positive");
        den_ = den;
        nums_.reserve(atoms.size());
        probs_.reserve(atoms.size());
        double sum = 0.0;
        for (const auto& [num, p] : atoms) {
            if (p < 0.0) throw std::invalid_argument("FiniteDistribution: negative probability");
            sum += p;
            if (p == 0.0) continue;
            nums_.push_back(num);
            probs_.push_back(p);
        }
        if (nums_.empty()) throw std::invalid_argument("FiniteDistribution: empty support");
        if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("FiniteDistribution: probabilities must sum to 1");
        canonicalize();
    }

    [[nodiscard]] std::size_t size() const { return nums_.size(); }
    [[nodiscard]] std::int64_t denominator() const { return den_; }
    [[nodiscard]] std::int64_t numerator(std::size_t i) const { return nums_.at(i); }
    [[nodiscard]] Rational value(std::size_t i) const { return {nums_.at(i), den_}; }
    [[nodiscard]] double value_real(std::size_t i) const {
        return static_cast<double>(nums_.at(i)) / static_cast<double>(den_);
    }
    [[nodiscard]] double prob(std::size_t i) const { return probs_.at(i); }
    [[nodiscard]] std::span<const std::int64_t> numerators() const { return nums_; }
    [[nodiscard]] std::span<const double> probs() const { return probs_; }

    /// Probability of an exact rational value; 0 if it is not an atom.
    [[nodiscard]] double prob_of(const Rational& v) const {
        if (den_ % v.den != 0) return 0.0;
        const std::int64_t target = Rational::checked_mul(v.num, den_ / v.den);
        const auto it = std::lower_bound(nums_.begin(), nums_.end(), target);
        if (it == nums_.end() || *it != target) return 0.0;
        return probs_[static_cast<std::size_t>(it - nums_.begin())];
    }

    /// Law of X + c.
    [[nodiscard]] FiniteDistribution shifted(const Rational& c) const {
        const std::int64_t den = common_denominator(den_, c.den);
        const std::int64_t self_f = den / den_;
        const std::int64_t shift = Rational::checked_mul(c.num, den / c.den);
        FiniteDistribution out;
        out.den_ = den;
        out.nums_.resize(nums_.size());
        out.probs_ = probs_;
        for (std::size_t i = 0; i < nums_.size(); ++i)
            out.nums_[i] = Rational::checked_add(Rational::checked_mul(nums_[i], self_f), shift);
        out.canonicalize();
        return out;
    }

    /// Law of c * X. A zero scale collapses to the point mass at 0.
    [[nodiscard]] FiniteDistribution scaled(const Rational& c) const {
        if (c.num == 0) return FiniteDistribution();
        std::map<std::int64_t, double> atoms;
        const std::int64_t den = checked_den(Rational::checked_mul(den_, c.den));
        for (std::size_t i = 0; i < nums_.size(); ++i)
            atoms[Rational::checked_mul(nums_[i], c.num)] += probs_[i];
        return FiniteDistribution(den, atoms);
    }

    /// Same support (exact) and probabilities equal within tol.
    [[nodiscard]] bool approx_equal(const FiniteDistribution& other, double tol = 1e-12) const {
        if (den_ != other.den_ || nums_ != other.nums_) return false;
        for (std::size_t i = 0; i < probs_.size(); ++i)
            if (std::abs(probs_[i] - other.probs_[i]) > tol) return false;
        return true;
    }

    static std::int64_t common_denominator(std::int64_t a, std::int64_t b) {
        return checked_den(Rational::checked_mul(a / std::gcd(a, b), b));
    }

  private:
    static std::int64_t checked_den(std::int64_t den) {
        if (den > max_denominator)
            throw std::overflow_error("FiniteDistribution: grid denominator beyond configured bound");
        return den;
    }

    void canonicalize() {
        std::int64_t g = den_;
        for (std::int64_t n : nums_) g = std::gcd(g, n < 0 ? -n : n);
        if (g > 1) {
            den_ /= g;
            for (auto& n : nums_) n /= g;
        }
    }

    std::int64_t den_;
    std::vector<std::int64_t> nums_;
    std::vector<double> probs_;
};

/// Mixture of laws under the given weights; atoms merged exactly on the grid.
inline FiniteDistribution mix(std::span<const FiniteDistribution> dists, std::span<const double> weights) {
    if (dists.empty() || dists.size() != weights.size())
        throw std::invalid_argument("mix: need one weight per distribution");
    std::int64_t den = 1;
    double wsum = 0.0;
    for (std::size_t k = 0; k < dists.size(); ++k) {
        if (weights[k] < 0.0) throw std::invalid_argument("mix: negative weight");
        wsum += weights[k];
        if (weights[k] > 0.0) den = FiniteDistribution::common_denominator(den, dists[k].denominator());
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("mix: weights must sum to 1");
    std::map<std::int64_t, double> atoms;
    for (std::size_t k = 0; k < dists.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const std::int64_t f = den / dists[k].denominator();
        for (std::size_t i = 0; i < dists[k].size(); ++i)
            atoms[Rational::checked_mul(dists[k].numerator(i), f)] += weights[k] * dists[k].prob(i);
    }
    return FiniteDistribution(den, atoms);
}

/// Law of X + Y for independent X, Y.
inline FiniteDistribution convolve(const FiniteDistribution& a, const FiniteDistribution& b) {
    const std::int64_t den = FiniteDistribution::common_denominator(a.denominator(), b.denominator());
    const std::int64_t fa = den / a.denominator();
    const std::int64_t fb = den / b.denominator();
    std::map<std::int64_t, double> atoms;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::int64_t na = Rational::checked_mul(a.numerator(i), fa);
        for (std::size_t j = 0; j < b.size(); ++j)
            atoms[Rational::checked_add(na, Rational::checked_mul(b.numerator(j), fb))] += a.prob(i) * b.prob(j);
    }
    return FiniteDistribution(den, atoms);
}

/// Law of scale * sum_i X_i for independent X_i. An empty list gives the point mass at 0.
inline FiniteDistribution convolve_scaled(std::span<const FiniteDistribution> dists, const Rational& scale) {
    FiniteDistribution acc;
    for (const auto& d : dists) acc = convolve(acc, d);
    return acc.scaled(scale);
}

/// Shannon entropy in nats, with 0 log 0 = 0.
inline double entropy(const FiniteDistribution& dist) {
    double h = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double p = dist.prob(i);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

/**
 * Joint law of (X, C) for a finite condition variable C: condition
 * probabilities plus one conditional law per condition. Condition labels
 * default to 0..k-1 (for selection variables they are the selection bitmasks).
 */
struct ConditionalTable {
    std::vector<std::uint64_t> labels;
    std::vector<double> cond_probs;
    std::vector<FiniteDistribution> laws;

    ConditionalTable(std::vector<double> cond_probs_, std::vector<FiniteDistribution> laws_,
                     std::vector<std::uint64_t> labels_ = {})
        : labels(std::move(labels_)), cond_probs(std::move(cond_probs_)), laws(std::move(laws_)) {
        if (cond_probs.empty() || cond_probs.size() != laws.size())
            throw std::invalid_argument("ConditionalTable: need one law per condition");
        if (labels.empty()) {
            labels.resize(cond_probs.size());
            for (std::size_t c = 0; c < labels.size(); ++c) labels[c] = c;
        }
        if (labels.size() != cond_probs.size()) throw std::invalid_argument("ConditionalTable: label count mismatch");
        double sum = 0.0;
        for (double p : cond_probs) {
            if (p < 0.0) throw std::invalid_argument("ConditionalTable: negative condition probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("ConditionalTable: condition probabilities must sum to 1");
    }

    [[nodiscard]] std::size_t conditions() const { return cond_probs.size(); }

    [[nodiscard]] FiniteDistribution marginal() const { return mix(laws, cond_probs); }
};

/**
 * Mutual information I(X; C) of the table in nats, computed as
 * H(marginal) - sum_c p_c H(law_c). Tiny negative round-off is clamped to 0;
 * anything beyond tolerance indicates a broken table and throws.
 */
inline double conditional_mi(const ConditionalTable& table) {
    double h_cond = 0.0;
    for (std::size_t c = 0; c < table.conditions(); ++c)
        if (table.cond_probs[c] > 0.0) h_cond += table.cond_probs[c] * entropy(table.laws[c]);
    const double mi = entropy(table.marginal()) - h_cond;
    if (mi < 0.0) {
        if (mi < -1e-12) throw std::logic_error("conditional_mi: negative beyond round-off");
        return 0.0;
    }
    return mi;
}

/**
 * Pointwise information density log[ P(x | c) / P(x) ] at an exact value.
 * The value must be in the support of the conditional law; a probability-zero
 * lookup is a domain error.
 */
inline double information_density(const ConditionalTable& table, std::size_t condition, const Rational& value,
                                  const FiniteDistribution& marginal) {
    const double p_cond = table.laws.at(condition).prob_of(value);
    if (p_cond <= 0.0) throw std::domain_error("information_density: probability-zero event");
    return std::log(p_cond / marginal.prob_of(value));
}

inline double information_density(const ConditionalTable& table, std::size_t condition, const Rational& value) {
    return information_density(table, condition, value, table.marginal());
}

}  // namespace metacmi
