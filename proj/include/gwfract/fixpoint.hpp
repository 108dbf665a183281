#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gwfract/branching.hpp"
#include "gwfract/symbolic.hpp"

namespace gwf {

// Upward-closed family of child sets, given by generators, a cardinality
// threshold, or a membership oracle declared monotone by its author.
class MonotoneCollection {
public:
    using Oracle = std::function<bool(const std::vector<Letter>&)>;

    static MonotoneCollection ary(std::size_t a);
    static MonotoneCollection generators(std::vector<std::vector<Letter>> sets);
    static MonotoneCollection oracle(std::string name, Oracle member);

    // Membership in the closure; S must be sorted.
    bool member(const std::vector<Letter>& S) const;
    bool trivial_all() const;
    std::optional<std::size_t> cardinality() const {
        return kind_ == Kind::Ary ? std::optional<std::size_t>(a_) : std::nullopt;
    }
    const std::vector<std::vector<Letter>>& generator_sets() const { return gens_; }
    std::string describe() const;

private:
    enum class Kind { Ary, Generators, Oracle };
    Kind kind_ = Kind::Ary;
    std::size_t a_ = 1;
    std::vector<std::vector<Letter>> gens_;
    Oracle oracle_;
    std::string name_;
};

// Checks S ∈ closure ∧ S ⊆ S' ⟹ S' ∈ closure on random pairs; returns the number of violations.
std::size_t monotonicity_violations(const MonotoneCollection& c, std::size_t alphabet_size, std::size_t samples,
                                    std::uint64_t seed);

enum class GStrategy { Auto, ClosedForm, Exact, MonteCarlo };

struct GFunction {
    const OffspringDistribution* offspring = nullptr;
    const MonotoneCollection* collection = nullptr;
    GStrategy strategy = GStrategy::Auto;
    std::size_t mc_samples = 100000;
    std::uint64_t seed = 0;
};

struct GValue {
    double value = 0.0;
    double std_error = 0.0;
    std::optional<std::pair<double, double>> ci;  // 3σ interval for Monte Carlo
    std::string method;
};

GValue g_eval(const GFunction& gf, double s, Exec exec = Exec::Parallel);

// Strategy g_eval would pick under Auto (or the forced one, after feasibility checks).
GStrategy resolve_strategy(const GFunction& gf);
const char* to_string(GStrategy s);

struct FixedPointResult {
    double s0 = 0.0;
    double tau = 1.0;
    double lo = 0.0, hi = 0.0;  // bracketing interval (equal to s0 for exact strategies)
    std::size_t iterations = 0;
    bool converged = false;
    std::string method;
    std::vector<double> trace;               // q_0, q_1, ... (first 64 iterates)
    std::optional<double> bisection;         // independent cross-check for exact strategies
};

FixedPointResult smallest_fixed_point(const GFunction& gf, double tol = 1e-12, std::size_t max_iter = 1'000'000);

// q_1..q_n with q_0 = 0 and q_m = g(q_{m-1}).
std::vector<double> g_iterates(const GFunction& gf, std::size_t n);

struct GkaResult {
    double value = 0.0;
    double std_error = 0.0;
    bool exact = false;
    bool fell_back = false;
    double truncated_mass = 0.0;
    std::string note;
};

// P(Z_k^{(s)} < a). Exact for binomial offspring while N^{k-1} stays under
// state_cap; Monte Carlo otherwise (flagged).
GkaResult g_k_a(const OffspringDistribution& offspring, std::size_t k, std::uint64_t a, double s,
                std::size_t trials, std::uint64_t seed, GStrategy strategy = GStrategy::Auto,
                std::size_t state_cap = 1'000'000, Exec exec = Exec::Parallel);

// Per-node collections for random *-trees, in threshold form: 𝒜_x = {A : |A| >= threshold(x, a_ρ(x))}.
struct StarFamily {
    std::function<std::size_t(const Word&, double)> threshold;
};

// P(|M_x^{(s)}| < A) for M_x ~ T ∩ Π_{ρ/a}, computed exactly from the truncated count pgf.
double star_node_g(const WeightedAlphabet& weights, double rho, const OffspringDistribution& offspring, double a,
                   std::size_t threshold, double s);

struct StarSupResult {
    double sup = 0.0;
    Word witness;
    double witness_a = 1.0;
    std::vector<std::pair<double, double>> values;  // (a, g) per distinct a-value
};

StarSupResult star_sup_g(const WeightedAlphabet& weights, double rho, const OffspringDistribution& offspring,
                         const StarFamily& family, double s, std::size_t height_cap = 4);

// Distinct a_ρ values realized by nodes of heights 0..height_cap, with a witness word each.
std::vector<std::pair<double, Word>> realized_a_values(const WeightedAlphabet& weights, double rho,
                                                       std::size_t height_cap);

struct AppendixBResult {
    double alpha = 0.0;
    double q = 0.0;
    double g_of_q = 0.0;
    double gap = 0.0;          // g(q) - q
    double gap_eps0 = 0.0;     // α - α³
    double depth1_g = 0.0;     // P(M_x^{(q)} < 2) for depth-1 nodes
    double deep_g = 0.0;       // P(M_x^{(q)} < 2) for nodes of depth >= 2 (equals q)
    std::size_t level = 0;
    double q_level = 0.0;      // g^level(0) for the binary-subtree collection
    Proportion mc_q;           // no binary subtree of length `level` below a depth-2 node
    Proportion mc_g;           // |M_∅^{(q)}| < 2 at the root
};

AppendixBResult appendix_b_gap(double p, double eps, std::size_t trials, std::uint64_t seed,
                               std::size_t level = 10, Exec exec = Exec::Parallel);

}  // namespace gwf
