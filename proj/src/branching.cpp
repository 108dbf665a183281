#include "gwfract/branching.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/binomial.hpp>

#include "gwfract/error.hpp"

namespace gwf {

OffspringDistribution OffspringDistribution::binomial(std::size_t n, double p) {
    require(n >= 1, "binomial offspring needs n >= 1");
    require(p > 0.0 && p <= 1.0, "binomial offspring needs p in (0,1]");
    OffspringDistribution w;
    w.kind_ = Kind::Binomial;
    w.n_ = n;
    w.p_.assign(n, p);
    return w;
}

OffspringDistribution OffspringDistribution::bernoulli(std::vector<double> p) {
    require(!p.empty(), "bernoulli offspring needs at least one letter");
    for (double pi : p) require(pi > 0.0 && pi <= 1.0, "every letter needs P(i in W) in (0,1]");
    OffspringDistribution w;
    w.kind_ = Kind::Bernoulli;
    w.n_ = p.size();
    w.p_ = std::move(p);
    return w;
}

OffspringDistribution OffspringDistribution::table(std::size_t alphabet_size, std::vector<Row> rows) {
    require(alphabet_size >= 1 && alphabet_size <= 20, "table offspring supports alphabets of size 1..20");
    require(!rows.empty(), "table offspring needs at least one row");
    double total = 0.0;
    std::vector<double> marg(alphabet_size, 0.0);
    for (auto& row : rows) {
        require(row.prob >= 0.0, "table probabilities must be nonnegative");
        std::sort(row.subset.begin(), row.subset.end());
        require(std::adjacent_find(row.subset.begin(), row.subset.end()) == row.subset.end(),
                "table subset repeats a letter");
        for (Letter l : row.subset) {
            require(l < alphabet_size, "table subset letter out of range");
            marg[l] += row.prob;
        }
        total += row.prob;
    }
    require(std::fabs(total - 1.0) <= 1e-12, "table probabilities must sum to 1");
    for (std::size_t i = 0; i < alphabet_size; ++i)
        require(marg[i] > 0.0, "every letter needs P(i in W) > 0 (letter " + std::to_string(i) + ")");
    OffspringDistribution w;
    w.kind_ = Kind::Table;
    w.n_ = alphabet_size;
    w.rows_ = std::move(rows);
    w.p_ = marg;
    double acc = 0.0;
    for (const auto& row : w.rows_) {
        acc += row.prob;
        w.cumulative_.push_back(acc);
    }
    return w;
}

double OffspringDistribution::mean() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

double OffspringDistribution::marginal(Letter i) const {
    require(i < n_, "letter out of range");
    return p_[i];
}

double OffspringDistribution::pgf(double s) const {
    if (kind_ == Kind::Table) {
        double v = 0.0;
        for (const auto& row : rows_) v += row.prob * std::pow(s, static_cast<double>(row.subset.size()));
        return v;
    }
    if (kind_ == Kind::Binomial) return std::pow(1.0 - p_[0] + p_[0] * s, static_cast<double>(n_));
    double v = 1.0;
    for (double p : p_) v *= 1.0 - p + p * s;
    return v;
}

std::vector<double> OffspringDistribution::size_pmf() const {
    if (kind_ == Kind::Binomial) return binomial_pmf(n_, p_[0]);
    std::vector<double> pmf(n_ + 1, 0.0);
    if (kind_ == Kind::Table) {
        for (const auto& row : rows_) pmf[row.subset.size()] += row.prob;
        return pmf;
    }
    pmf[0] = 1.0;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = i + 1; j-- > 0;) {
            pmf[j + 1] += pmf[j] * p_[i];
            pmf[j] *= 1.0 - p_[i];
        }
    }
    return pmf;
}

std::vector<Letter> OffspringDistribution::sample(Stream& rng) const {
    std::vector<Letter> out;
    if (kind_ == Kind::Table) {
        double u = rng.uniform();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t idx = it == cumulative_.end() ? rows_.size() - 1
                                                  : static_cast<std::size_t>(it - cumulative_.begin());
        return rows_[idx].subset;
    }
    out.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i)
        if (rng.uniform() < p_[i]) out.push_back(static_cast<Letter>(i));
    return out;
}

std::string OffspringDistribution::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Binomial: {
            char buf[32];
            auto res = std::to_chars(buf, buf + sizeof buf, p_[0]);
            os << "binomial(n=" << n_ << ",p=" << std::string(buf, res.ptr) << ")";
            break;
        }
        case Kind::Bernoulli: os << "bernoulli(" << n_ << " letters)"; break;
        case Kind::Table: os << "table(" << rows_.size() << " rows over " << n_ << " letters)"; break;
    }
    return os.str();
}

// ---------------------------------------------------------------- sampling

GWSample sample_gw(const OffspringDistribution& offspring, std::size_t depth, std::uint64_t seed,
                   std::size_t node_budget) {
    require(depth >= 1, "sample depth must be at least 1");
    GWOracle oracle(offspring, seed);
    GWSample out;
    out.seed = seed;
    out.tree = FiniteTree(offspring.alphabet_size(), depth);
    out.level_sizes.assign(depth + 1, 0);
    out.level_sizes[0] = 1;
    std::vector<Word> frontier{Word{}};
    std::size_t nodes = 1;
    for (std::size_t level = 0; level < depth; ++level) {
        std::vector<Word> next;
        for (const Word& w : frontier) {
            std::vector<Letter> kids = oracle.children(w);
            nodes += kids.size();
            if (nodes > node_budget)
                fail(ErrorKind::ResourceLimit, "node budget exceeded while sampling level " +
                                                   std::to_string(level + 1) + "; complete depth " +
                                                   std::to_string(level));
            Word child = w;
            child.push_back(0);
            for (Letter l : kids) {
                child.back() = l;
                next.push_back(child);
            }
            out.tree.set_children(w, std::move(kids));
        }
        out.level_sizes[level + 1] = next.size();
        if (next.empty() && !out.extinct_at) out.extinct_at = level + 1;
        frontier = std::move(next);
    }
    return out;
}

bool survives_to(const GWOracle& oracle, std::size_t depth, const Word& root) {
    Word w = root;
    auto dfs = [&](auto&& self, std::size_t remaining) -> bool {
        if (remaining == 0) return true;
        for (Letter l : oracle.children(w)) {
            w.push_back(l);
            bool ok = self(self, remaining - 1);
            w.pop_back();
            if (ok) return true;
        }
        return false;
    };
    return dfs(dfs, depth);
}

std::vector<Letter> thin(const std::vector<Letter>& subset, double s, std::uint64_t seed) {
    require(s >= 0.0 && s <= 1.0, "thinning parameter must lie in [0,1]");
    Stream rng(seed);
    std::vector<Letter> out;
    for (Letter l : subset)
        if (rng.uniform() >= s) out.push_back(l);
    return out;
}

// ---------------------------------------------------------------- extinction

namespace {
bool size_is_one_almost_surely(const OffspringDistribution& w) {
    auto pmf = w.size_pmf();
    return pmf.size() > 1 && std::fabs(pmf[1] - 1.0) < 1e-15;
}
}  // namespace

double extinction_prob(const OffspringDistribution& offspring, double tol) {
    require(tol > 0.0, "tolerance must be positive");
    if (size_is_one_almost_surely(offspring)) return 0.0;
    if (offspring.mean() <= 1.0) return 1.0;
    double s = 0.0;
    for (std::size_t it = 0; it < 100'000'000; ++it) {
        double next = offspring.pgf(s);
        if (std::fabs(next - s) < tol) return next;
        s = next;
    }
    return s;
}

double extinction_prob_bisection(const OffspringDistribution& offspring, double tol) {
    if (size_is_one_almost_surely(offspring)) return 0.0;
    if (offspring.mean() <= 1.0) return 1.0;
    auto h = [&](double s) { return offspring.pgf(s) - s; };
    if (h(0.0) <= 0.0) return 0.0;
    const int grid = 100000;
    double lo = 0.0, hi = 1.0;
    for (int j = 1; j < grid; ++j) {
        double s = static_cast<double>(j) / grid;
        if (h(s) <= 0.0) {
            hi = s;
            break;
        }
        lo = s;
    }
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        (h(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> kesten_stigum_series(const GWSample& sample, double m) {
    require(m > 1.0, "Kesten-Stigum ratios need m > 1");
    std::vector<double> out;
    double mk = 1.0;
    for (std::size_t z : sample.level_sizes) {
        out.push_back(static_cast<double>(z) / mk);
        mk *= m;
    }
    return out;
}

Proportion extinction_frequency(const OffspringDistribution& offspring, std::size_t depth, std::size_t trials,
                                std::uint64_t seed, Exec exec) {
    Proportion out;
    out.trials = trials;
    out.hits = count_indexed(
        trials,
        [&](std::size_t t) {
            GWOracle oracle(offspring, derive_seed(seed, t));
            return !survives_to(oracle, depth);
        },
        exec);
    return out;
}

FrequencyEstimate descendant_property_frequency(const OffspringDistribution& offspring,
                                                const TreeProperty& property, std::size_t level,
                                                std::size_t horizon, std::size_t trials, std::uint64_t seed,
                                                std::size_t retry_cap, Exec exec) {
    require(trials > 0, "need at least one trial");
    struct Trial {
        bool ok = false;
        std::size_t rejected = 0;
        std::size_t nodes = 0;
        std::size_t hits = 0;
    };
    auto results = map_indexed<Trial>(
        trials,
        [&](std::size_t t) {
            Trial tr;
            std::uint64_t trial_seed = derive_seed(seed, t);
            for (std::size_t attempt = 0; attempt < retry_cap; ++attempt) {
                GWOracle oracle(offspring, derive_seed(trial_seed, attempt));
                if (!survives_to(oracle, level + horizon)) {
                    ++tr.rejected;
                    continue;
                }
                std::vector<Word> frontier{Word{}};
                for (std::size_t l = 0; l < level; ++l) {
                    std::vector<Word> next;
                    for (const Word& w : frontier)
                        for (Letter c : oracle.children(w)) {
                            Word child = w;
                            child.push_back(c);
                            next.push_back(std::move(child));
                        }
                    frontier = std::move(next);
                }
                tr.ok = true;
                tr.nodes = frontier.size();
                for (const Word& v : frontier) tr.hits += property(oracle, v) ? 1 : 0;
                break;
            }
            return tr;
        },
        exec);

    FrequencyEstimate est;
    std::size_t nodes = 0, hits = 0, witnessed = 0;
    std::vector<double> fractions;
    for (const auto& tr : results) {
        est.rejected += tr.rejected;
        if (!tr.ok) continue;
        ++est.trials;
        nodes += tr.nodes;
        hits += tr.hits;
        witnessed += tr.hits > 0 ? 1 : 0;
        fractions.push_back(static_cast<double>(tr.hits) / static_cast<double>(tr.nodes));
    }
    if (est.trials == 0) fail(ErrorKind::DegenerateSample, "no trial survived within the retry cap");
    est.frequency = static_cast<double>(hits) / static_cast<double>(nodes);
    est.witness_frequency = static_cast<double>(witnessed) / static_cast<double>(est.trials);
    if (fractions.size() > 1) {
        double mean = std::accumulate(fractions.begin(), fractions.end(), 0.0) / fractions.size();
        double var = 0.0;
        for (double f : fractions) var += (f - mean) * (f - mean);
        var /= static_cast<double>(fractions.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(fractions.size()));
    }
    return est;
}

// ---------------------------------------------------------------- binomial helpers

std::vector<double> binomial_pmf(std::uint64_t n, double p) {
    std::vector<double> pmf(n + 1, 0.0);
    if (p <= 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    if (p >= 1.0) {
        pmf[n] = 1.0;
        return pmf;
    }
    boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
    for (std::uint64_t k = 0; k <= n; ++k) pmf[k] = boost::math::pdf(dist, static_cast<double>(k));
    return pmf;
}

double binomial_cdf(std::uint64_t n, double p, std::int64_t k) {
    if (k < 0) return 0.0;
    if (static_cast<std::uint64_t>(k) >= n) return 1.0;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    boost::math::binomial_distribution<double> dist(static_cast<double>(n), p);
    return boost::math::cdf(dist, static_cast<double>(k));
}

}  // namespace gwf
