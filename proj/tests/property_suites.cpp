#include "property_suites.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "gwfract/error.hpp"
#include "gwfract/extraction.hpp"
#include "gwfract/fixpoint.hpp"
#include "gwfract/geometry.hpp"

using namespace gwf;

namespace {

// Collects the first few counterexamples of a suite.
struct Tally {
    std::size_t checks = 0, failures = 0;
    std::ostringstream first;
    void expect(bool ok, const std::string& what) {
        ++checks;
        if (ok) return;
        if (++failures <= 3) first << what << "; ";
    }
    std::string summary() const {
        std::ostringstream os;
        os << checks << " checks, " << failures << " failures";
        if (failures) os << " (" << first.str() << ")";
        return os.str();
    }
};

WeightedAlphabet random_alphabet(Stream& rng, std::size_t n_lo, std::size_t n_hi, double r_lo, double r_hi) {
    std::size_t n = n_lo + rng.below(n_hi - n_lo + 1);
    std::vector<double> r(n);
    for (auto& x : r) x = r_lo + (r_hi - r_lo) * rng.uniform();
    return WeightedAlphabet(r);
}

Word random_word(Stream& rng, std::size_t n, std::size_t len) {
    Word w(len);
    for (auto& l : w) l = static_cast<Letter>(rng.below(n));
    return w;
}

bool section_exact_cover(std::uint64_t seed, std::string& detail) {
    Stream rng(derive_seed(seed, "section-cover"));
    Tally t;
    for (int trial = 0; trial < 200; ++trial) {
        auto wa = random_alphabet(rng, 2, 4, 0.15, 0.6);
        double rho = wa.r_min() * (0.02 + 0.9 * rng.uniform());
        auto sec = section_pi_rho(wa, rho);
        t.expect(validate_section(wa.size(), sec), "section is not an exact cover");
        for (const auto& w : sec) {
            double r = wa.weight(w);
            t.expect(weight_leq(r, rho) && r > rho * wa.r_min() * (1 - 1e-12), "weight outside (rho r_min, rho]");
        }
        for (int k = 0; k < 20; ++k) {
            Word inf = random_word(rng, wa.size(), 64);
            std::size_t hits = 0;
            for (std::size_t len = 1; len <= inf.size(); ++len)
                hits += in_section(wa, rho, Word(inf.begin(), inf.begin() + static_cast<long>(len))) ? 1 : 0;
            t.expect(hits == 1, "an infinite word has " + std::to_string(hits) + " prefixes in the section");
        }
    }
    detail = t.summary();
    return t.failures == 0;
}

bool next_element(std::uint64_t seed, std::string& detail) {
    Stream rng(derive_seed(seed, "next-element"));
    Tally t;
    for (int trial = 0; trial < 1000; ++trial) {
        auto wa = random_alphabet(rng, 2, 3, 0.2, 0.6);
        const double rho = wa.r_min() * (0.3 + 0.6 * rng.uniform());
        const std::size_t n = 1 + rng.below(2), m = 1 + rng.below(2);
        auto sec = section_pi_rho(wa, std::pow(rho, static_cast<double>(n)));
        const Word i = sec[rng.below(sec.size())];
        const RhoIndex ri = rho_index(wa, rho, i);
        t.expect(ri.n == n, "rho_index disagrees with the section the word was drawn from");
        const double sigma = std::pow(rho, static_cast<double>(m)) / ri.a;
        const double big = std::pow(rho, static_cast<double>(n + m));
        Word j;
        if (rng.uniform() < 0.5) {
            auto rel = section_below(wa, sigma);
            j = rel[rng.below(rel.size())];
        } else {
            j = random_word(rng, wa.size(), 1 + rng.below(10));
        }
        const bool lhs = in_section(wa, big, concat(i, j));
        const bool rhs = in_section(wa, sigma, j);
        t.expect(lhs == rhs, "ij in Pi_{rho^(n+m)} differs from j in Pi_{rho^m/a} for i=" + word_to_string(i) +
                                 " j=" + word_to_string(j));
    }
    detail = t.summary();
    return t.failures == 0;
}

std::vector<Letter> letters_of(unsigned mask, std::size_t n) {
    std::vector<Letter> out;
    for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1U) out.push_back(static_cast<Letter>(i));
    return out;
}

bool monotone_closure(std::uint64_t seed, std::string& detail) {
    Stream rng(derive_seed(seed, "monotone"));
    Tally t;
    const std::size_t n = 5;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::vector<Letter>> gens;
        const std::size_t count = 1 + rng.below(4);
        for (std::size_t g = 0; g < count; ++g) gens.push_back(letters_of(1U + static_cast<unsigned>(rng.below(31)), n));
        auto c = MonotoneCollection::generators(gens);
        for (const auto& g : gens) t.expect(c.member(g), "a generator is not a member");
        for (unsigned a = 0; a < 32; ++a) {
            const bool ma = c.member(letters_of(a, n));
            bool want = false;
            for (const auto& g : gens) {
                unsigned gm = 0;
                for (Letter l : g) gm |= 1U << l;
                want = want || (gm & a) == gm;
            }
            t.expect(ma == want, "membership differs from the upward closure of the generators");
            for (unsigned b = 0; b < 32; ++b)
                if ((a & b) == a && ma) t.expect(c.member(letters_of(b, n)), "a superset of a member is outside");
        }
        t.expect(monotonicity_violations(c, n, 200, derive_seed(seed, static_cast<std::uint64_t>(trial))) == 0,
                 "sampled monotonicity violation");
    }
    for (std::size_t a = 0; a <= n; ++a) {
        auto c = MonotoneCollection::ary(a);
        for (unsigned s = 0; s < 32; ++s)
            t.expect(c.member(letters_of(s, n)) == (static_cast<std::size_t>(__builtin_popcount(s)) >= a),
                     "Ary membership is not a cardinality threshold");
    }
    detail = t.summary();
    return t.failures == 0;
}

bool thinning_composition(std::uint64_t seed, std::string& detail) {
    Tally t;
    // Thinning a binomial law by s is the binomial law with p(1-s); g composes accordingly.
    for (double p : {0.3, 0.6, 0.9})
        for (double s1 : {0.0, 0.2, 0.5})
            for (double s2 : {0.1, 0.4, 0.8}) {
                auto w = OffspringDistribution::binomial(6, p);
                auto w1 = OffspringDistribution::binomial(6, p * (1 - s1));
                for (std::size_t a : {1, 2, 4}) {
                    auto c = MonotoneCollection::ary(a);
                    const double both = 1 - (1 - s1) * (1 - s2);
                    double direct = g_eval({&w, &c, GStrategy::Exact}, both).value;
                    double nested = g_eval({&w1, &c, GStrategy::Exact}, s2).value;
                    t.expect(std::abs(direct - nested) < 1e-12, "exact g does not compose under thinning");
                }
            }
    // Sampled thinning: thin(thin(S, s1), s2) keeps each element with (1-s1)(1-s2).
    std::vector<Letter> all(40);
    for (Letter i = 0; i < 40; ++i) all[i] = i;
    const double s1 = 0.3, s2 = 0.5, keep = (1 - s1) * (1 - s2);
    std::size_t kept = 0, direct = 0;
    const std::size_t trials = 2000;
    for (std::size_t k = 0; k < trials; ++k) {
        auto a = thin(all, s1, derive_seed(seed, 2 * k));
        auto b = thin(a, s2, derive_seed(seed, 2 * k + 1));
        t.expect(std::includes(a.begin(), a.end(), b.begin(), b.end()), "nested thinning is not a subset");
        kept += b.size();
        direct += thin(all, 1 - keep, derive_seed(seed, 1'000'000 + k)).size();
    }
    const double n = 40.0 * trials;
    const double sd = std::sqrt(keep * (1 - keep) / n);
    t.expect(std::abs(kept / n - keep) < 4 * sd, "nested keep rate off");
    t.expect(std::abs(direct / n - keep) < 4 * sd, "single-step keep rate off");
    detail = t.summary();
    return t.failures == 0;
}

Mat random_rotation(Stream& rng, int d) {
    Mat a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = rng.uniform() - 0.5;
    Eigen::HouseholderQR<Mat> qr(a);
    return qr.householderQ() * Mat::Identity(d, d);
}

bool width_invariance(std::uint64_t seed, std::string& detail) {
    Stream rng(derive_seed(seed, "width"));
    Tally t;
    for (int trial = 0; trial < 120; ++trial) {
        const int d = trial % 2 == 0 ? 2 : 3;
        PointCloud c;
        c.d = d;
        const std::size_t n = 6 + rng.below(20);
        for (std::size_t i = 0; i < n * static_cast<std::size_t>(d); ++i) c.coords.push_back(rng.uniform());
        const double w0 = width(c).w;
        Mat O = random_rotation(rng, d);
        Vec shift(d);
        for (int k = 0; k < d; ++k) shift[k] = 10 * (rng.uniform() - 0.5);
        const double lambda = std::exp(4 * (rng.uniform() - 0.5));
        PointCloud moved, scaled;
        moved.d = scaled.d = d;
        for (std::size_t i = 0; i < c.size(); ++i) {
            moved.push(O * c.vec(i) + shift);
            scaled.push(lambda * c.vec(i));
        }
        const double tol = d == 2 ? 1e-9 : 1e-6;
        t.expect(std::abs(width(moved).w - w0) <= tol * std::max(1.0, w0), "width changed under a rigid motion");
        t.expect(std::abs(width(scaled).w - lambda * w0) <= tol * std::max(1.0, lambda * w0),
                 "width did not scale linearly");
    }
    detail = t.summary();
    return t.failures == 0;
}

bool thread_determinism(std::uint64_t seed, std::string& detail) {
    Tally t;
    auto perc = percolation_ifs(3, 2);
    auto w = OffspringDistribution::binomial(9, 0.6);
    auto sample = sample_gw(w, 5, derive_seed(seed, "det"));
    auto cloud = render(perc, sample.tree);
    auto gen = MonotoneCollection::generators({{0, 1, 2}, {4}});
    const auto scales = geometric_ladder(0.05, 0.2, 3);
    auto fingerprint = [&](Exec exec) {
        std::ostringstream os;
        os.precision(17);
        os << extinction_frequency(w, 20, 3000, seed, exec).hits << "|";
        os << g_eval({&w, &gen, GStrategy::MonteCarlo, 5000, seed}, 0.3, exec).value << "|";
        os << g_k_a(w, 3, 30, 0.5, 3000, seed, GStrategy::MonteCarlo, 1'000'000, exec).value << "|";
        auto chk = empirical_diffuse_check(cloud, 0.01, scales, 50, seed, exec);
        os << chk.worst_ratio << "," << chk.tested << "|";
        auto flat = search_flat_ball(cloud, 0.01, scales, 500, seed, exec);
        os << flat.best_ratio << "|";
        DiffuseOptions o;
        o.exec = exec;
        o.tol = 1e-3;
        auto cert = diffuseness_constant(sierpinski_ifs().maps(), render_full(sierpinski_ifs(), 4), o);
        os << cert.c_low << "," << cert.c_up << "|";
        for (auto c : box_dimension(cloud, 6, exec).counts) os << c << ",";
        std::vector<double> mass(cloud.size(), 1.0 / static_cast<double>(cloud.size()));
        os << ahlfors_ratio_check(cloud, mass, 1.5, 100, seed, 0.05, 0.2, 4, exec).c2_hat << "|";
        PercolationParams P;
        P.c = 3;
        P.seed = seed;
        auto sub = percolation_pipeline(P, exec);
        os << word_to_string(sub.root) << "," << sub.subtree.to_text().size() << "," << sub.beta;
        return os.str();
    };
    const std::string serial = fingerprint(Exec::Serial);
    for (int threads : {1, 2, 4}) {
        set_thread_count(threads);
        t.expect(fingerprint(Exec::Parallel) == serial,
                 "parallel results with " + std::to_string(threads) + " threads differ from serial");
    }
    set_thread_count(0);
    detail = t.summary();
    return t.failures == 0;
}

}  // namespace

std::vector<SuiteResult> run_property_suites(std::uint64_t seed) {
    const std::vector<std::pair<std::string, std::function<bool(std::uint64_t, std::string&)>>> suites{
        {"section exact cover", section_exact_cover},
        {"next-element equivalence", next_element},
        {"monotone closure laws", monotone_closure},
        {"thinning composition", thinning_composition},
        {"width isometry and scaling", width_invariance},
        {"seed determinism across thread counts", thread_determinism},
    };
    std::vector<SuiteResult> out;
    for (const auto& [name, run] : suites) {
        SuiteResult r;
        r.name = name;
        auto t0 = std::chrono::steady_clock::now();
        try {
            r.pass = run(seed, r.detail);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }
    return out;
}
