#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gwfract/parallel.hpp"
#include "gwfract/rng.hpp"
#include "gwfract/symbolic.hpp"

namespace gwf {

// Law of a random subset W of the alphabet.
class OffspringDistribution {
public:
    enum class Kind { Binomial, Bernoulli, Table };

    struct Row {
        std::vector<Letter> subset;
        double prob = 0.0;
    };

    static OffspringDistribution binomial(std::size_t n, double p);
    static OffspringDistribution bernoulli(std::vector<double> p);
    static OffspringDistribution table(std::size_t alphabet_size, std::vector<Row> rows);

    Kind kind() const { return kind_; }
    std::size_t alphabet_size() const { return n_; }
    double mean() const;
    // P(i ∈ W).
    double marginal(Letter i) const;
    double pgf(double s) const;
    // pmf of |W| on 0..N.
    std::vector<double> size_pmf() const;
    // Per-letter inclusion probabilities; only meaningful when letters are independent.
    const std::vector<double>& letter_probs() const { return p_; }
    bool independent_letters() const { return kind_ != Kind::Table; }
    const std::vector<Row>& rows() const { return rows_; }
    double binomial_p() const { return p_.empty() ? 0.0 : p_[0]; }

    // One draw of W, sorted ascending.
    std::vector<Letter> sample(Stream& rng) const;

    std::string describe() const;

private:
    Kind kind_ = Kind::Binomial;
    std::size_t n_ = 0;
    std::vector<double> p_;
    std::vector<Row> rows_;
    std::vector<double> cumulative_;
};

// Children of any word of a GW tree, computed on demand from (seed, word).
// Materialized samples and lazy searches see the same tree.
class GWOracle {
public:
    GWOracle(const OffspringDistribution& offspring, std::uint64_t seed) : w_(&offspring), seed_(seed) {}

    std::vector<Letter> children(const Word& w) const {
        Stream rng = node_stream(seed_, w);
        return w_->sample(rng);
    }
    const OffspringDistribution& offspring() const { return *w_; }
    std::uint64_t seed() const { return seed_; }

private:
    const OffspringDistribution* w_;
    std::uint64_t seed_;
};

struct GWSample {
    FiniteTree tree;
    std::uint64_t seed = 0;
    std::optional<std::size_t> extinct_at;
    std::vector<std::size_t> level_sizes;
};

GWSample sample_gw(const OffspringDistribution& offspring, std::size_t depth, std::uint64_t seed,
                   std::size_t node_budget = kDefaultNodeBudget);

// Lazily decides whether level `depth` of the tree below `root` is nonempty.
bool survives_to(const GWOracle& oracle, std::size_t depth, const Word& root = {});

// Keeps each element independently with probability 1-s.
std::vector<Letter> thin(const std::vector<Letter>& subset, double s, std::uint64_t seed);

double extinction_prob(const OffspringDistribution& offspring, double tol = 1e-14);
// Bisection on f(s)-s below the first sign change; independent cross-check.
double extinction_prob_bisection(const OffspringDistribution& offspring, double tol = 1e-14);

std::vector<double> kesten_stigum_series(const GWSample& sample, double m);

using TreeProperty = std::function<bool(const GWOracle&, const Word&)>;

struct FrequencyEstimate {
    double frequency = 0.0;   // pooled fraction of level nodes with the property
    double std_error = 0.0;   // across-trial standard error of the per-trial fractions
    double witness_frequency = 0.0;  // fraction of trials with at least one witness
    std::size_t trials = 0;
    std::size_t rejected = 0;
};

// Fraction of level-`level` nodes v with property(T^v), conditioned on survival
// to `level + horizon`.
FrequencyEstimate descendant_property_frequency(const OffspringDistribution& offspring,
                                                const TreeProperty& property, std::size_t level,
                                                std::size_t horizon, std::size_t trials, std::uint64_t seed,
                                                std::size_t retry_cap = 100000, Exec exec = Exec::Parallel);

// Frequency of extinction by `depth` over independent trees.
Proportion extinction_frequency(const OffspringDistribution& offspring, std::size_t depth, std::size_t trials,
                                std::uint64_t seed, Exec exec = Exec::Parallel);

// Binomial pmf vector on 0..n, computed by a stable recurrence from the mode.
std::vector<double> binomial_pmf(std::uint64_t n, double p);
// P(Bin(n,p) <= k).
double binomial_cdf(std::uint64_t n, double p, std::int64_t k);

}  // namespace gwf
