#include <cmath>

#include "doctest.h"
#include "gwfract/error.hpp"
#include "gwfract/fixpoint.hpp"

using namespace gwf;

namespace {

std::vector<Letter> letters_of(unsigned mask, std::size_t n) {
    std::vector<Letter> out;
    for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1U) out.push_back(static_cast<Letter>(i));
    return out;
}

// g(s) = P(thinned W outside the collection), by summing over every pair (W, kept ⊆ W).
double g_by_enumeration(const std::vector<double>& p, const MonotoneCollection& c, double s) {
    const std::size_t n = p.size();
    double total = 0.0;
    for (unsigned w = 0; w < (1U << n); ++w) {
        double pw = 1.0;
        for (std::size_t i = 0; i < n; ++i) pw *= (w >> i & 1U) ? p[i] : 1.0 - p[i];
        for (unsigned k = w;; k = (k - 1) & w) {
            const int kept = __builtin_popcount(k), dropped = __builtin_popcount(w) - kept;
            const double pk = std::pow(1.0 - s, kept) * std::pow(s, dropped);
            if (!c.member(letters_of(k, n))) total += pw * pk;
            if (k == 0) break;
        }
    }
    return total;
}

}  // namespace

TEST_CASE("monotone collections") {
    auto a2 = MonotoneCollection::ary(2);
    CHECK_FALSE(a2.member({3}));
    CHECK(a2.member({0, 5}));
    CHECK(a2.cardinality() == 2);
    auto gen = MonotoneCollection::generators({{0, 1}, {2}});
    CHECK(gen.member({2}));
    CHECK(gen.member({0, 1, 3}));
    CHECK_FALSE(gen.member({0, 3}));
    CHECK_FALSE(gen.member({}));
    CHECK(MonotoneCollection::ary(0).trivial_all());
    CHECK(monotonicity_violations(gen, 5, 2000, 1) == 0);
    CHECK(monotonicity_violations(a2, 5, 2000, 1) == 0);
    auto bad = MonotoneCollection::oracle("singletons", [](const std::vector<Letter>& s) { return s.size() == 1; });
    CHECK(monotonicity_violations(bad, 4, 2000, 1) > 0);
}

TEST_CASE("g agrees with subset enumeration for every strategy") {
    const std::vector<double> p{0.7, 0.7, 0.7, 0.7};
    auto w = OffspringDistribution::binomial(4, 0.7);
    auto a2 = MonotoneCollection::ary(2);
    auto gen = MonotoneCollection::generators({{0, 1}, {2, 3}, {1, 2, 3}});
    for (double s : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        GFunction cf{&w, &a2, GStrategy::ClosedForm};
        GFunction ex{&w, &a2, GStrategy::Exact};
        GFunction gx{&w, &gen, GStrategy::Exact};
        CHECK(g_eval(cf, s).value == doctest::Approx(g_by_enumeration(p, a2, s)).epsilon(1e-12));
        CHECK(g_eval(ex, s).value == doctest::Approx(g_by_enumeration(p, a2, s)).epsilon(1e-12));
        CHECK(g_eval(gx, s).value == doctest::Approx(g_by_enumeration(p, gen, s)).epsilon(1e-12));
        GFunction mc{&w, &gen, GStrategy::MonteCarlo, 40000, 17};
        GValue v = g_eval(mc, s);
        CHECK(std::abs(v.value - g_by_enumeration(p, gen, s)) <= 3 * v.std_error + 1e-12);
        REQUIRE(v.ci.has_value());
    }
    auto bern = OffspringDistribution::bernoulli({0.9, 0.4, 0.6});
    GFunction bx{&bern, &gen, GStrategy::Exact};
    CHECK(g_eval(bx, 0.3).value == doctest::Approx(g_by_enumeration({0.9, 0.4, 0.6}, gen, 0.3)).epsilon(1e-12));
}

TEST_CASE("strategy resolution") {
    auto w = OffspringDistribution::binomial(9, 0.6);
    auto a2 = MonotoneCollection::ary(2);
    auto gen = MonotoneCollection::generators({{0, 1}});
    CHECK(resolve_strategy({&w, &a2}) == GStrategy::ClosedForm);
    CHECK(resolve_strategy({&w, &gen}) == GStrategy::Exact);
    auto big = OffspringDistribution::binomial(40, 0.5);
    CHECK(resolve_strategy({&big, &gen}) == GStrategy::MonteCarlo);
    CHECK_THROWS_AS(resolve_strategy({&w, &gen, GStrategy::ClosedForm}), Error);
}

TEST_CASE("smallest fixed point") {
    SUBCASE("Ary(1) recovers the extinction probability") {
        for (double p : {0.4, 0.6, 0.9}) {
            auto w = OffspringDistribution::binomial(9, p);
            auto a1 = MonotoneCollection::ary(1);
            auto r = smallest_fixed_point({&w, &a1});
            CHECK(r.s0 == doctest::Approx(extinction_prob(w)).epsilon(1e-9));
            CHECK(r.tau == doctest::Approx(1 - r.s0));
        }
    }
    SUBCASE("closed-form Ary(2) matches bisection and the iterate trace") {
        auto w = OffspringDistribution::binomial(9, 0.6);
        auto a2 = MonotoneCollection::ary(2);
        auto r = smallest_fixed_point({&w, &a2});
        CHECK(r.converged);
        REQUIRE(r.bisection.has_value());
        CHECK(r.s0 == doctest::Approx(*r.bisection).epsilon(1e-9));
        CHECK(r.trace.front() == 0.0);
        for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
        auto it = g_iterates({&w, &a2}, 3);
        REQUIRE(it.size() == 3);
        CHECK(it[0] == doctest::Approx(g_by_enumeration(std::vector<double>(9, 0.6), a2, 0.0)));
    }
    SUBCASE("subcritical for the collection gives tau = 0") {
        auto w = OffspringDistribution::binomial(3, 0.5);
        auto a2 = MonotoneCollection::ary(2);
        auto r = smallest_fixed_point({&w, &a2});
        CHECK(r.s0 == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("Monte Carlo fixed point brackets the exact one") {
        auto w = OffspringDistribution::binomial(4, 0.8);
        auto gen = MonotoneCollection::generators({{0, 1}, {2, 3}});
        auto exact = smallest_fixed_point({&w, &gen, GStrategy::Exact});
        auto mc = smallest_fixed_point({&w, &gen, GStrategy::MonteCarlo, 50000, 3}, 1e-6);
        CHECK(mc.lo <= exact.s0 + 0.01);
        CHECK(mc.hi >= exact.s0 - 0.01);
    }
}

TEST_CASE("g_{k,a}: exact chain against closed forms and Monte Carlo") {
    auto w = OffspringDistribution::binomial(9, 0.6);
    for (std::uint64_t a : {1, 2, 5}) {
        auto r = g_k_a(w, 1, a, 0.5, 0, 1);
        CHECK(r.exact);
        CHECK(r.value == doctest::Approx(binomial_cdf(9, 0.3, static_cast<std::int64_t>(a) - 1)).epsilon(1e-12));
    }
    auto ex = g_k_a(w, 3, 20, 0.5, 0, 1);
    auto mc = g_k_a(w, 3, 20, 0.5, 40000, 7, GStrategy::MonteCarlo);
    CHECK(ex.exact);
    CHECK_FALSE(mc.exact);
    CHECK(std::abs(ex.value - mc.value) <= 3 * mc.std_error + 1e-9);
    CHECK(g_k_a(w, 2, 0, 0.5, 0, 1).value == 0.0);
    auto capped = g_k_a(w, 4, 10, 0.5, 2000, 1, GStrategy::Exact, 10);
    CHECK(capped.fell_back);
    auto full = OffspringDistribution::binomial(4, 1.0);
    CHECK(g_k_a(full, 3, 64, 0.0, 0, 1).value == doctest::Approx(0.0));
    CHECK(g_k_a(full, 3, 65, 0.0, 0, 1).value == doctest::Approx(1.0));
}

TEST_CASE("star-tree node g") {
    auto wa = WeightedAlphabet::uniform(2, 0.5);
    auto w = OffspringDistribution::binomial(2, 0.8);
    // rho = 1/4 at a = 1: the section is level 2; count pgf is nested through the two levels.
    auto inner = [&](double x) { return 0.2 + 0.8 * (0.3 + 0.7 * x); };
    auto outer = [&](double x) { return std::pow(0.2 + 0.8 * std::pow(inner(x), 2), 2); };
    // P(count < 2) = P(0) + P(1) from the pgf by finite differences on a polynomial of degree 4.
    const double p0 = outer(0.0);
    const double h = 1e-5;
    const double p1 = (outer(h) - outer(-h)) / (2 * h);
    CHECK(star_node_g(wa, 0.25, w, 1.0, 2, 0.3) == doctest::Approx(p0 + p1).epsilon(1e-6));
    CHECK(star_node_g(wa, 0.25, w, 1.0, 0, 0.3) == 0.0);
}

TEST_CASE("realized a-values and sup") {
    WeightedAlphabet wa({0.5, 0.25});
    auto vals = realized_a_values(wa, 0.2, 3);
    REQUIRE_FALSE(vals.empty());
    for (const auto& [a, x] : vals) {
        CHECK(a > wa.r_min());
        CHECK(a <= 1.0 + 1e-12);
        if (!x.empty()) CHECK(rho_index(wa, 0.2, x).a == doctest::Approx(a));
    }
    auto w = OffspringDistribution::bernoulli({0.9, 0.9});
    StarFamily fam{[](const Word&, double) { return std::size_t{1}; }};
    auto sup = star_sup_g(wa, 0.2, w, fam, 0.1, 3);
    for (const auto& [a, g] : sup.values) CHECK(g <= sup.sup + 1e-15);
}

TEST_CASE("counterexample gap") {
    auto r = appendix_b_gap(0.9, 0.01, 4000, 5, 6);
    CHECK(r.g_of_q == doctest::Approx(1 - (r.alpha + 0.01) * r.alpha * r.alpha));
    CHECK(r.gap > 0.0);
    CHECK(r.gap_eps0 == doctest::Approx(r.alpha - std::pow(r.alpha, 3)));
    CHECK(r.deep_g == doctest::Approx(r.q).epsilon(1e-9));
    CHECK(std::abs(r.mc_q.value() - r.q_level) <= 3 * r.mc_q.std_error() + 1e-9);
    CHECK(std::abs(r.mc_g.value() - r.g_of_q) <= 3 * r.mc_g.std_error() + 1e-9);
    CHECK_THROWS_AS(appendix_b_gap(0.9, 0.5, 10, 1), Error);
}
