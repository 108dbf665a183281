#include "gwfract/fixpoint.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>

#include "gwfract/error.hpp"

namespace gwf {

// ---------------------------------------------------------------- collections

MonotoneCollection MonotoneCollection::ary(std::size_t a) {
    MonotoneCollection c;
    c.kind_ = Kind::Ary;
    c.a_ = a;
    return c;
}

MonotoneCollection MonotoneCollection::generators(std::vector<std::vector<Letter>> sets) {
    require(!sets.empty(), "generator list must be nonempty");
    for (auto& g : sets) {
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
    }
    MonotoneCollection c;
    c.kind_ = Kind::Generators;
    c.gens_ = std::move(sets);
    return c;
}

MonotoneCollection MonotoneCollection::oracle(std::string name, Oracle member) {
    MonotoneCollection c;
    c.kind_ = Kind::Oracle;
    c.oracle_ = std::move(member);
    c.name_ = std::move(name);
    return c;
}

bool MonotoneCollection::member(const std::vector<Letter>& S) const {
    switch (kind_) {
        case Kind::Ary: return S.size() >= a_;
        case Kind::Generators:
            for (const auto& g : gens_)
                if (std::includes(S.begin(), S.end(), g.begin(), g.end())) return true;
            return false;
        case Kind::Oracle: return oracle_(S);
    }
    return false;
}

bool MonotoneCollection::trivial_all() const { return member({}); }

std::string MonotoneCollection::describe() const {
    switch (kind_) {
        case Kind::Ary: return "ary(" + std::to_string(a_) + ")";
        case Kind::Generators: return "generators(" + std::to_string(gens_.size()) + ")";
        case Kind::Oracle: return "oracle(" + name_ + ")";
    }
    return "collection";
}

std::size_t monotonicity_violations(const MonotoneCollection& c, std::size_t alphabet_size, std::size_t samples,
                                    std::uint64_t seed) {
    std::size_t bad = 0;
    for (std::size_t t = 0; t < samples; ++t) {
        Stream rng(derive_seed(seed, t));
        std::vector<Letter> S, T;
        for (Letter l = 0; l < alphabet_size; ++l) {
            bool in_s = rng.bernoulli(0.5);
            if (in_s) S.push_back(l);
            if (in_s || rng.bernoulli(0.5)) T.push_back(l);
        }
        if (c.member(S) && !c.member(T)) ++bad;
    }
    return bad;
}

// ---------------------------------------------------------------- g evaluation

const char* to_string(GStrategy s) {
    switch (s) {
        case GStrategy::Auto: return "auto";
        case GStrategy::ClosedForm: return "closed-form";
        case GStrategy::Exact: return "exact-enumeration";
        case GStrategy::MonteCarlo: return "monte-carlo";
    }
    return "?";
}

GStrategy resolve_strategy(const GFunction& gf) {
    require(gf.offspring && gf.collection, "g-function needs offspring and collection");
    const auto& W = *gf.offspring;
    const bool cardinal = gf.collection->cardinality().has_value();
    const bool closed_ok = cardinal && W.kind() != OffspringDistribution::Kind::Table;
    const bool exact_ok = W.alphabet_size() <= 20;
    switch (gf.strategy) {
        case GStrategy::Auto:
            if (closed_ok) return GStrategy::ClosedForm;
            if (exact_ok) return GStrategy::Exact;
            return GStrategy::MonteCarlo;
        case GStrategy::ClosedForm:
            if (!closed_ok)
                fail(ErrorKind::Capability,
                     "closed form needs a cardinality collection and independent letters (have " +
                         gf.collection->describe() + ", " + W.describe() + ")");
            return GStrategy::ClosedForm;
        case GStrategy::Exact:
            if (!exact_ok)
                fail(ErrorKind::Capability, "exact enumeration needs an alphabet of at most 20 letters (have " +
                                                std::to_string(W.alphabet_size()) + ")");
            return GStrategy::Exact;
        case GStrategy::MonteCarlo: return GStrategy::MonteCarlo;
    }
    return GStrategy::MonteCarlo;
}

namespace {

// Poisson-binomial pmf truncated to 0..cap-1.
std::vector<double> poisson_binomial_head(const std::vector<double>& q, std::size_t cap) {
    std::vector<double> pmf(cap, 0.0);
    if (cap == 0) return pmf;
    pmf[0] = 1.0;
    for (double qi : q)
        for (std::size_t j = cap; j-- > 0;) {
            double stay = pmf[j] * (1.0 - qi);
            double from = j > 0 ? pmf[j - 1] * qi : 0.0;
            pmf[j] = stay + from;
        }
    return pmf;
}

double g_closed_form(const OffspringDistribution& W, std::size_t a, double s) {
    if (a == 0) return 0.0;
    if (W.kind() == OffspringDistribution::Kind::Binomial)
        return binomial_cdf(W.alphabet_size(), W.binomial_p() * (1.0 - s), static_cast<std::int64_t>(a) - 1);
    std::vector<double> q;
    for (double p : W.letter_probs()) q.push_back(p * (1.0 - s));
    auto head = poisson_binomial_head(q, a);
    double v = 0.0;
    for (double x : head) v += x;
    return std::min(1.0, v);
}

double g_exact(const OffspringDistribution& W, const MonotoneCollection& A, double s) {
    const std::size_t n = W.alphabet_size();
    double miss = 0.0;
    std::vector<Letter> S;
    if (W.kind() == OffspringDistribution::Kind::Table) {
        for (const auto& row : W.rows()) {
            const std::size_t m = row.subset.size();
            for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
                S.clear();
                double pr = row.prob;
                for (std::size_t j = 0; j < m; ++j) {
                    if (mask & (1u << j)) {
                        S.push_back(row.subset[j]);
                        pr *= 1.0 - s;
                    } else {
                        pr *= s;
                    }
                }
                if (pr > 0.0 && !A.member(S)) miss += pr;
            }
        }
        return miss;
    }
    const auto& p = W.letter_probs();
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        S.clear();
        double pr = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            double q = p[j] * (1.0 - s);
            if (mask & (1u << j)) {
                S.push_back(static_cast<Letter>(j));
                pr *= q;
            } else {
                pr *= 1.0 - q;
            }
        }
        if (pr > 0.0 && !A.member(S)) miss += pr;
    }
    return miss;
}

}  // namespace

GValue g_eval(const GFunction& gf, double s, Exec exec) {
    require(s >= 0.0 && s <= 1.0, "g is defined on [0,1]");
    GStrategy strat = resolve_strategy(gf);
    GValue out;
    out.method = to_string(strat);
    const auto& W = *gf.offspring;
    const auto& A = *gf.collection;
    if (A.trivial_all()) {
        out.value = 0.0;
        out.method = "trivial-all";
        return out;
    }
    switch (strat) {
        case GStrategy::ClosedForm: out.value = g_closed_form(W, *A.cardinality(), s); break;
        case GStrategy::Exact: out.value = g_exact(W, A, s); break;
        default: {
            require(gf.mc_samples > 0, "Monte Carlo needs samples");
            // Common random numbers: trial t always uses the same uniforms, so the
            // estimate is monotone in s.
            std::uint64_t hits = count_indexed(
                gf.mc_samples,
                [&](std::size_t t) {
                    Stream rng(derive_seed(gf.seed, t));
                    std::vector<Letter> w = W.sample(rng);
                    std::vector<Letter> kept;
                    for (Letter l : w)
                        if (rng.uniform() >= s) kept.push_back(l);
                    return !A.member(kept);
                },
                exec);
            Proportion pr{hits, gf.mc_samples};
            out.value = pr.value();
            out.std_error = pr.std_error();
            out.ci = std::make_pair(std::max(0.0, out.value - 3 * out.std_error),
                                    std::min(1.0, out.value + 3 * out.std_error));
        }
    }
    return out;
}

std::vector<double> g_iterates(const GFunction& gf, std::size_t n) {
    std::vector<double> out;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        q = g_eval(gf, q).value;
        out.push_back(q);
    }
    return out;
}

FixedPointResult smallest_fixed_point(const GFunction& gf, double tol, std::size_t max_iter) {
    require(tol > 0.0, "tolerance must be positive");
    FixedPointResult r;
    GStrategy strat = resolve_strategy(gf);
    r.method = std::string("iteration from 0, ") + to_string(strat);
    double q = 0.0;
    r.trace.push_back(q);
    double sigma = 0.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        GValue gv = g_eval(gf, q);
        sigma = gv.std_error;
        double next = gv.value;
        if (r.trace.size() < 64) r.trace.push_back(next);
        r.iterations = it;
        double step = std::fabs(next - q);
        q = next;
        if (step < std::max(tol, 3.0 * sigma)) {
            r.converged = true;
            break;
        }
    }
    r.s0 = q;
    r.tau = 1.0 - q;
    r.lo = std::max(0.0, q - 3.0 * sigma);
    r.hi = std::min(1.0, q + 3.0 * sigma);
    if (strat == GStrategy::MonteCarlo) return r;

    // Bisection below the first sign change of h(s) = g(s) - s.
    auto h = [&](double s) { return g_eval(gf, s).value - s; };
    if (h(0.0) <= 0.0) {
        r.bisection = 0.0;
        return r;
    }
    const int grid = 2000;
    double lo = 0.0, hi = 1.0;
    for (int j = 1; j <= grid; ++j) {
        double s = static_cast<double>(j) / grid;
        if (h(s) <= 0.0) {
            hi = s;
            break;
        }
        lo = s;
    }
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (h(mid) > 0.0 ? lo : hi) = mid;
    }
    r.bisection = 0.5 * (lo + hi);
    return r;
}

// ---------------------------------------------------------------- g_{k,a}

namespace {

// Nonnegligible window of the Bin(n,p) pmf, grown outward from the mode.
struct PmfWindow {
    std::uint64_t lo = 0;
    std::vector<double> values;
};

PmfWindow binomial_window(std::uint64_t n, double p, double cutoff) {
    PmfWindow w;
    if (n == 0 || p <= 0.0) {
        w.values = {1.0};
        return w;
    }
    if (p >= 1.0) {
        w.lo = n;
        w.values = {1.0};
        return w;
    }
    boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
    std::uint64_t mode = static_cast<std::uint64_t>(std::floor((static_cast<double>(n) + 1.0) * p));
    if (mode > n) mode = n;
    double pm = boost::math::pdf(dist, static_cast<double>(mode));
    const double odds = p / (1.0 - p);
    std::vector<double> down, up;
    double v = pm;
    for (std::uint64_t k = mode; k > 0;) {
        v *= static_cast<double>(k) / (static_cast<double>(n - k + 1) * odds);
        --k;
        if (v < cutoff) break;
        down.push_back(v);
    }
    v = pm;
    for (std::uint64_t k = mode; k < n; ++k) {
        v *= static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
        if (v < cutoff) break;
        up.push_back(v);
    }
    w.lo = mode - down.size();
    w.values.assign(down.rbegin(), down.rend());
    w.values.push_back(pm);
    w.values.insert(w.values.end(), up.begin(), up.end());
    return w;
}

}  // namespace

GkaResult g_k_a(const OffspringDistribution& offspring, std::size_t k, std::uint64_t a, double s,
                std::size_t trials, std::uint64_t seed, GStrategy strategy, std::size_t state_cap, Exec exec) {
    require(k >= 1, "k must be at least 1");
    require(s >= 0.0 && s <= 1.0, "s must lie in [0,1]");
    GkaResult out;
    if (a == 0) {
        out.exact = true;
        out.note = "a=0: every set qualifies";
        return out;
    }
    const std::size_t N = offspring.alphabet_size();
    long double states = std::pow(static_cast<long double>(N), static_cast<long double>(k - 1));
    const bool exact_ok =
        offspring.kind() == OffspringDistribution::Kind::Binomial && states <= static_cast<long double>(state_cap);
    if (strategy == GStrategy::Exact && !exact_ok) {
        out.fell_back = true;
        out.note = "exact count chain unavailable (needs binomial offspring and N^(k-1) <= state cap); used Monte Carlo";
    }
    if (exact_ok && strategy != GStrategy::MonteCarlo) {
        const double p = offspring.binomial_p();
        const double cutoff = 1e-15;
        std::vector<double> dist{0.0, 1.0};
        for (std::size_t j = 1; j < k; ++j) {
            std::size_t maxz = dist.size() - 1;
            std::vector<double> next(N * maxz + 1, 0.0);
            for (std::size_t z = 0; z <= maxz; ++z) {
                double m = dist[z];
                if (m == 0.0) continue;
                PmfWindow w = binomial_window(N * z, p, cutoff * 1e-3);
                for (std::size_t i = 0; i < w.values.size(); ++i) next[w.lo + i] += m * w.values[i];
            }
            for (double& x : next)
                if (x < cutoff) {
                    out.truncated_mass += x;
                    x = 0.0;
                }
            while (next.size() > 1 && next.back() == 0.0) next.pop_back();
            dist = std::move(next);
        }
        const double q = p * (1.0 - s);
        double v = 0.0;
        for (std::size_t z = 0; z < dist.size(); ++z) {
            if (dist[z] == 0.0) continue;
            v += dist[z] * binomial_cdf(N * z, q, static_cast<std::int64_t>(a) - 1);
        }
        out.value = std::min(1.0, v);
        out.exact = true;
        out.note = "exact count chain";
        return out;
    }
    if (!out.fell_back && strategy != GStrategy::MonteCarlo) {
        out.fell_back = true;
        out.note = "state cap exceeded or non-binomial offspring; used Monte Carlo";
    }
    require(trials > 0, "Monte Carlo needs trials");
    std::uint64_t hits = count_indexed(
        trials,
        [&](std::size_t t) {
            GWOracle oracle(offspring, derive_seed(seed, t));
            const std::uint64_t thin_seed = derive_seed(derive_seed(seed, t), "thin");
            std::uint64_t count = 0;
            Word w;
            auto dfs = [&](auto&& self, std::size_t depth) -> void {
                if (count >= a) return;
                if (depth == k) {
                    if (node_stream(thin_seed, w).uniform() >= s) ++count;
                    return;
                }
                for (Letter l : oracle.children(w)) {
                    w.push_back(l);
                    self(self, depth + 1);
                    w.pop_back();
                    if (count >= a) return;
                }
            };
            dfs(dfs, 0);
            return count < a;
        },
        exec);
    Proportion pr{hits, trials};
    out.value = pr.value();
    out.std_error = pr.std_error();
    if (out.note.empty()) out.note = "monte carlo";
    return out;
}

// ---------------------------------------------------------------- *-trees

namespace {

using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b, std::size_t cap) {
    Poly out(cap, 0.0);
    for (std::size_t i = 0; i < a.size() && i < cap; ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size() && i + j < cap; ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

}  // namespace

double star_node_g(const WeightedAlphabet& weights, double rho, const OffspringDistribution& offspring, double a,
                   std::size_t threshold, double s) {
    require(weights.size() == offspring.alphabet_size(), "weights and offspring alphabet differ");
    if (threshold == 0) return 0.0;
    const double sigma = rho / a;
    const std::size_t cap = threshold;
    std::map<long long, Poly> memo;
    // Count pgf of thinned section words below a node of relative weight r, truncated mod x^cap.
    auto pgf_below = [&](auto&& self, double r) -> Poly {
        if (weight_leq(r, sigma)) {
            Poly leaf(cap, 0.0);
            leaf[0] = s;
            if (cap > 1) leaf[1] = 1.0 - s;
            return leaf;
        }
        long long key = std::llround(std::log(r) * 1e9);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::vector<Poly> child(weights.size());
        for (std::size_t j = 0; j < weights.size(); ++j) child[j] = self(self, r * weights[j]);
        Poly out(cap, 0.0);
        if (offspring.kind() == OffspringDistribution::Kind::Table) {
            for (const auto& row : offspring.rows()) {
                Poly prod(cap, 0.0);
                prod[0] = 1.0;
                for (Letter l : row.subset) prod = poly_mul(prod, child[l], cap);
                for (std::size_t i = 0; i < cap; ++i) out[i] += row.prob * prod[i];
            }
        } else {
            out[0] = 1.0;
            const auto& p = offspring.letter_probs();
            for (std::size_t j = 0; j < weights.size(); ++j) {
                Poly factor = child[j];
                for (double& c : factor) c *= p[j];
                factor[0] += 1.0 - p[j];
                out = poly_mul(out, factor, cap);
            }
        }
        memo[key] = out;
        return out;
    };
    Poly root = pgf_below(pgf_below, 1.0);
    double v = 0.0;
    for (double c : root) v += c;
    return std::min(1.0, v);
}

std::vector<std::pair<double, Word>> realized_a_values(const WeightedAlphabet& weights, double rho,
                                                       std::size_t height_cap) {
    require(rho > 0.0 && rho < weights.r_min(), "rho must lie in (0, r_min)");
    std::vector<std::pair<double, Word>> all{{1.0, Word{}}};
    std::vector<std::pair<double, Word>> frontier = all;
    auto known = [&](double a) {
        for (const auto& [b, w] : all)
            if (std::fabs(a - b) <= 1e-9 * b) return true;
        return false;
    };
    for (std::size_t h = 0; h < height_cap; ++h) {
        std::vector<std::pair<double, Word>> next;
        for (const auto& [a, x] : frontier) {
            for (const Word& j : section_below(weights, rho / a)) {
                double an = a * weights.weight(j) / rho;
                bool seen = known(an);
                for (const auto& [b, w] : next)
                    if (std::fabs(an - b) <= 1e-9 * b) seen = true;
                if (!seen) next.emplace_back(an, concat(x, j));
            }
        }
        for (const auto& e : next) all.push_back(e);
        frontier = std::move(next);
    }
    std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    return all;
}

StarSupResult star_sup_g(const WeightedAlphabet& weights, double rho, const OffspringDistribution& offspring,
                         const StarFamily& family, double s, std::size_t height_cap) {
    require(s >= 0.0 && s <= 1.0, "s must lie in [0,1]");
    require(static_cast<bool>(family.threshold), "*-tree family needs a threshold function");
    StarSupResult out;
    out.sup = -1.0;
    for (const auto& [a, x] : realized_a_values(weights, rho, height_cap)) {
        double g = star_node_g(weights, rho, offspring, a, family.threshold(x, a), s);
        out.values.emplace_back(a, g);
        if (g > out.sup) {
            out.sup = g;
            out.witness = x;
            out.witness_a = a;
        }
    }
    return out;
}

// ---------------------------------------------------------------- counterexample fixture

namespace {

// Random *-tree of the counterexample: the root keeps {0,1} with probability
// α+ε and {0} otherwise, depth-1 nodes have all three children, deeper nodes
// follow Bin(3,p).
class CounterexampleTree {
public:
    CounterexampleTree(double root_pair_prob, const OffspringDistribution& deep, std::uint64_t seed)
        : pair_prob_(root_pair_prob), deep_(deep, seed), seed_(seed) {}

    std::vector<Letter> children(const Word& w) const {
        if (w.empty()) {
            Stream rng = node_stream(derive_seed(seed_, "root"), w);
            return rng.uniform() < pair_prob_ ? std::vector<Letter>{0, 1} : std::vector<Letter>{0};
        }
        if (w.size() == 1) return {0, 1, 2};
        return deep_.children(w);
    }

private:
    double pair_prob_;
    GWOracle deep_;
    std::uint64_t seed_;
};

bool has_binary_subtree(const CounterexampleTree& t, Word& w, std::size_t n) {
    if (n == 0) return true;
    int good = 0;
    for (Letter l : t.children(w)) {
        w.push_back(l);
        bool ok = has_binary_subtree(t, w, n - 1);
        w.pop_back();
        if (ok && ++good >= 2) return true;
    }
    return false;
}

}  // namespace

AppendixBResult appendix_b_gap(double p, double eps, std::size_t trials, std::uint64_t seed, std::size_t level,
                               Exec exec) {
    require(p > 0.0 && p <= 1.0, "p must lie in (0,1]");
    require(eps >= 0.0, "eps must be nonnegative");
    const auto deep = OffspringDistribution::binomial(3, p);
    const auto binary = MonotoneCollection::ary(2);
    GFunction gf{&deep, &binary, GStrategy::ClosedForm};
    FixedPointResult fp = smallest_fixed_point(gf, 1e-15);
    AppendixBResult r;
    r.alpha = 1.0 - fp.s0;
    require(r.alpha > 1e-12, "binary subtrees have probability 0 at this p; increase p");
    require(r.alpha + eps <= 1.0, "alpha + eps exceeds 1");
    r.q = 1.0 - r.alpha;
    r.g_of_q = 1.0 - (r.alpha + eps) * r.alpha * r.alpha;
    r.gap = r.g_of_q - r.q;
    r.gap_eps0 = r.alpha - r.alpha * r.alpha * r.alpha;
    r.depth1_g = binomial_cdf(3, r.alpha, 1);
    r.deep_g = g_eval(gf, r.q).value;
    r.level = level;
    r.q_level = level ? g_iterates(gf, level).back() : 0.0;

    const std::uint64_t seed_q = derive_seed(seed, "appendix-b-q");
    r.mc_q.trials = trials;
    r.mc_q.hits = count_indexed(
        trials,
        [&](std::size_t t) {
            CounterexampleTree tree(r.alpha + eps, deep, derive_seed(seed_q, t));
            Word x{0, 0};
            return !has_binary_subtree(tree, x, level);
        },
        exec);

    const std::uint64_t seed_g = derive_seed(seed, "appendix-b-g");
    r.mc_g.trials = trials;
    r.mc_g.hits = count_indexed(
        trials,
        [&](std::size_t t) {
            std::uint64_t ts = derive_seed(seed_g, t);
            CounterexampleTree tree(r.alpha + eps, deep, ts);
            std::size_t kept = 0;
            for (Letter l : tree.children({}))
                if (node_stream(derive_seed(ts, "thin"), Word{l}).uniform() >= r.q) ++kept;
            return kept < 2;
        },
        exec);
    return r;
}

}  // namespace gwf
