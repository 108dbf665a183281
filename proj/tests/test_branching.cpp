#include <cmath>

#include "doctest.h"
#include "gwfract/branching.hpp"
#include "gwfract/error.hpp"

using namespace gwf;

namespace {

double choose(int n, int k) { return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0)); }

}  // namespace

TEST_CASE("binomial pmf and cdf against the product formula") {
    for (int n : {1, 5, 9, 30}) {
        for (double p : {0.0, 0.1, 0.6, 1.0}) {
            auto pmf = binomial_pmf(static_cast<std::uint64_t>(n), p);
            REQUIRE(pmf.size() == static_cast<std::size_t>(n) + 1);
            double acc = 0.0;
            for (int k = 0; k <= n; ++k) {
                double want = choose(n, k) * std::pow(p, k) * std::pow(1 - p, n - k);
                CHECK(pmf[static_cast<std::size_t>(k)] == doctest::Approx(want).epsilon(1e-10));
                acc += want;
                CHECK(binomial_cdf(static_cast<std::uint64_t>(n), p, k) == doctest::Approx(acc).epsilon(1e-10));
            }
        }
    }
    CHECK(binomial_cdf(4, 0.3, -1) == 0.0);
}

TEST_CASE("offspring laws") {
    auto bin = OffspringDistribution::binomial(9, 0.6);
    CHECK(bin.mean() == doctest::Approx(5.4));
    CHECK(bin.pgf(1.0) == doctest::Approx(1.0));
    CHECK(bin.pgf(0.3) == doctest::Approx(std::pow(0.4 + 0.6 * 0.3, 9)));
    CHECK(bin.marginal(4) == doctest::Approx(0.6));

    auto bern = OffspringDistribution::bernoulli({0.2, 0.5, 1.0});
    CHECK(bern.mean() == doctest::Approx(1.7));
    CHECK(bern.pgf(0.5) == doctest::Approx((0.8 + 0.1) * (0.5 + 0.25) * 0.5));

    auto tab = OffspringDistribution::table(3, {{{0, 1}, 0.25}, {{2}, 0.5}, {{}, 0.25}});
    CHECK(tab.mean() == doctest::Approx(1.0));
    CHECK(tab.marginal(0) == doctest::Approx(0.25));
    CHECK(tab.pgf(0.0) == doctest::Approx(0.25));
    CHECK_FALSE(tab.independent_letters());

    CHECK_THROWS_AS(OffspringDistribution::binomial(3, 1.5), Error);
    CHECK_THROWS_AS(OffspringDistribution::table(2, {{{0}, 0.5}}), Error);
    CHECK_THROWS_AS(OffspringDistribution::table(2, {{{5}, 1.0}}), Error);
}

TEST_CASE("sampled child sets follow the law") {
    auto tab = OffspringDistribution::table(3, {{{0, 1}, 0.25}, {{2}, 0.75}});
    Stream rng(42);
    int pairs = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        auto s = tab.sample(rng);
        CHECK(std::is_sorted(s.begin(), s.end()));
        pairs += s.size() == 2 ? 1 : 0;
    }
    const double sd = std::sqrt(0.25 * 0.75 / n);
    CHECK(std::abs(pairs / double(n) - 0.25) < 4 * sd);
}

TEST_CASE("extinction probability: closed forms and cross-checks") {
    // f(s) = (1-p+ps)^2 has smallest fixed point ((1-p)/p)^2 for p > 1/2.
    for (double p : {0.6, 0.75, 0.9}) {
        auto w = OffspringDistribution::binomial(2, p);
        CHECK(extinction_prob(w) == doctest::Approx(std::pow((1 - p) / p, 2)).epsilon(1e-10));
    }
    auto w = OffspringDistribution::binomial(9, 0.6);
    CHECK(extinction_prob(w) == doctest::Approx(extinction_prob_bisection(w)).epsilon(1e-10));
    CHECK(extinction_prob(OffspringDistribution::binomial(3, 0.3)) == doctest::Approx(1.0));
    CHECK(extinction_prob(OffspringDistribution::binomial(3, 1.0)) == doctest::Approx(0.0));
    // Critical case converges slowly but stays at 1.
    CHECK(extinction_prob(OffspringDistribution::binomial(2, 0.5), 1e-6) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("extinction frequency matches the fixed point") {
    auto w = OffspringDistribution::binomial(3, 0.6);
    const double q = extinction_prob(w);
    Proportion f = extinction_frequency(w, 25, 20000, 3);
    CHECK(std::abs(f.value() - q) <= 3 * f.std_error());
    Proportion g = extinction_frequency(w, 25, 20000, 3, Exec::Serial);
    CHECK(g.hits == f.hits);
}

TEST_CASE("lazy oracle and materialized samples agree") {
    auto w = OffspringDistribution::binomial(4, 0.65);
    auto s = sample_gw(w, 5, 1234);
    GWOracle oracle(w, 1234);
    for (const auto& x : s.tree.nodes())
        if (x.size() < 5) CHECK(s.tree.children(x) == oracle.children(x));
    for (std::size_t d = 1; d <= 5; ++d) CHECK(survives_to(oracle, d) == (s.level_sizes[d] > 0));
    CHECK(sample_gw(w, 5, 1234).tree == s.tree);
    CHECK_FALSE(sample_gw(w, 5, 1235).tree == s.tree);
}

TEST_CASE("sampling budget and extinction bookkeeping") {
    auto w = OffspringDistribution::binomial(9, 1.0);
    try {
        sample_gw(w, 8, 1, 1000);
        FAIL("expected a resource limit");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ResourceLimit);
    }
    auto dead = sample_gw(OffspringDistribution::binomial(2, 0.05), 6, 1);
    REQUIRE(dead.extinct_at.has_value());
    CHECK(dead.level_sizes[*dead.extinct_at] == 0);
    auto full = sample_gw(OffspringDistribution::binomial(3, 1.0), 4, 1);
    auto ks = kesten_stigum_series(full, 3.0);
    for (double v : ks) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("thinning keeps each element with probability 1-s") {
    std::vector<Letter> all(50);
    for (Letter i = 0; i < 50; ++i) all[i] = i;
    std::size_t kept = 0, trials = 400;
    for (std::size_t t = 0; t < trials; ++t) {
        auto k = thin(all, 0.3, t);
        CHECK(std::includes(all.begin(), all.end(), k.begin(), k.end()));
        kept += k.size();
    }
    const double n = 50.0 * trials;
    CHECK(std::abs(kept / n - 0.7) < 4 * std::sqrt(0.21 / n));
    CHECK(thin(all, 0.0, 1) == all);
    CHECK(thin(all, 1.0, 1).empty());
}

TEST_CASE("descendant property frequency of survival") {
    auto w = OffspringDistribution::binomial(3, 0.6);
    const double q = extinction_prob(w);
    TreeProperty always = [](const GWOracle&, const Word&) { return true; };
    auto f = descendant_property_frequency(w, always, 2, 3, 200, 9);
    CHECK(f.frequency == doctest::Approx(1.0));
    TreeProperty survives = [](const GWOracle& o, const Word& v) { return survives_to(o, 25, v); };
    auto g = descendant_property_frequency(w, survives, 1, 0, 4000, 9);
    CHECK(std::abs(g.frequency - (1 - q)) < 4 * g.std_error + 0.01);
}
