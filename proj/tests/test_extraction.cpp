#include <cmath>
#include <set>

#include "doctest.h"
#include "gwfract/error.hpp"
#include "gwfract/extraction.hpp"
#include "gwfract/geometry.hpp"

using namespace gwf;

namespace {

bool has_ary_subtree(const FiniteTree& t, const Word& v, std::size_t m, std::size_t a) {
    if (m == 0) return true;
    if (v.size() >= t.depth()) return false;
    std::size_t good = 0;
    for (Letter l : t.children(v))
        if (has_ary_subtree(t, concat(v, Word{l}), m - 1, a)) ++good;
    return good >= a;
}

void check_exact_arity(const StarTree& s, std::size_t arity, std::size_t height) {
    for (const auto& [w, node] : s.nodes()) {
        if (node.height < height) {
            CHECK(node.children.size() == arity);
        } else {
            CHECK(node.children.empty());
        }
    }
}

void check_in_sample(const ExtractedSubset& s, const GWOracle& oracle) {
    for (const auto& [rel, node] : s.subtree.nodes()) {
        Word w = concat(s.root, rel);
        Word prefix;
        for (Letter l : w) {
            auto kids = oracle.children(prefix);
            REQUIRE(std::binary_search(kids.begin(), kids.end(), l));
            prefix.push_back(l);
        }
    }
}

void check_measure(const ExtractedSubset& s) {
    CHECK(s.measure.at(Word{}) == doctest::Approx(1.0));
    for (const auto& [w, node] : s.subtree.nodes()) {
        if (node.children.empty()) continue;
        double sum = 0.0;
        for (const auto& c : node.children) sum += s.measure.at(concat(w, c));
        CHECK(sum == doctest::Approx(s.measure.at(w)).epsilon(1e-12));
    }
    double total = 0.0;
    for (double m : s.masses) total += m;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

}  // namespace

TEST_CASE("Ary subtree search agrees with the recursive definition") {
    auto w = OffspringDistribution::binomial(3, 0.75);
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        auto s = sample_gw(w, 5, seed);
        for (std::size_t a : {1, 2, 3}) {
            CardinalityPredicate pred(a);
            for (std::size_t n : {1, 3, 5}) {
                auto found = find_subtree(s.tree, pred, n);
                CHECK(found.has_value() == has_ary_subtree(s.tree, {}, n, a));
                if (!found) continue;
                CHECK(found->level(n).size() == static_cast<std::size_t>(std::pow(a, n)));
                for (const auto& x : found->nodes()) {
                    CHECK(s.tree.contains(x));
                    if (x.size() < n) CHECK(found->children(x).size() == a);
                }
            }
        }
    }
}

TEST_CASE("adding nodes never removes a subtree") {
    auto w = OffspringDistribution::binomial(3, 0.6);
    CardinalityPredicate pred(2);
    Stream rng(77);
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto s = sample_gw(w, 4, seed);
        FiniteTree t = s.tree;
        bool before = find_subtree(t, pred, 3).has_value();
        for (int i = 0; i < 10; ++i) {
            Word x;
            for (int k = 0; k < 4; ++k) x.push_back(static_cast<Letter>(rng.below(3)));
            t.insert(x);
            bool after = find_subtree(t, pred, 3).has_value();
            CHECK((!before || after));
            before = after;
        }
    }
}

TEST_CASE("diffuse block predicate") {
    DiffuseBlockPredicate pred(2, 3);
    StarTree t(2);
    for (const Word& c : std::vector<Word>{{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {1, 1, 1}}) t.add_child({}, c);
    StarTreeView view(t);
    auto all = [](const Word&) { return true; };
    auto sel = pred.select(view, {}, all);
    REQUIRE(sel.has_value());
    CHECK(std::set<Word>(sel->begin(), sel->end()) == std::set<Word>{{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}});
    auto none = pred.select(view, {}, [](const Word& c) { return c != Word{0, 1, 0}; });
    CHECK_FALSE(none.has_value());

    auto both = std::make_shared<IntersectionPredicate>(std::vector<std::shared_ptr<BuilderPredicate>>{
        std::make_shared<DiffuseBlockPredicate>(2, 3), std::make_shared<CardinalityPredicate>(5)});
    auto five = both->select(view, {}, all);
    REQUIRE(five.has_value());
    CHECK(five->size() == 5);
    auto six = IntersectionPredicate({std::make_shared<DiffuseBlockPredicate>(2, 3),
                                      std::make_shared<CardinalityPredicate>(6)});
    CHECK_FALSE(six.select(view, {}, all).has_value());
}

TEST_CASE("section diffuse predicate") {
    auto ifs = sierpinski_ifs();
    SectionDiffusePredicate one(ifs, render_full(ifs, 5), 1, 0.05);
    CHECK_FALSE(one.diffuse({true, true, true}));
    SectionDiffusePredicate two(ifs, render_full(ifs, 5), 2, 0.05);
    CHECK(two.diffuse(std::vector<bool>(9, true)));
    std::vector<bool> row(9, false);
    row[0] = row[1] = row[3] = row[4] = true;  // 00, 01, 10, 11 all touch the bottom edge
    CHECK_FALSE(two.diffuse(row));
    CHECK_FALSE(two.diffuse({true, false, false, false, false, false, false, false, false}));
    CHECK(two.certifications() >= 2);
}

TEST_CASE("natural measure") {
    StarTree t(3);
    for (Letter a = 0; a < 3; ++a) {
        t.add_child({}, {a});
        for (Letter b = 0; b < 3; ++b) t.add_child({a}, {b, 0});
    }
    auto mu = natural_measure(t, 1.0 / 9.0, 0.5);
    CHECK(mu.at({}) == 1.0);
    CHECK(mu.at({1}) == doctest::Approx(1.0 / 3.0));
    CHECK(mu.at({2, 1, 0}) == doctest::Approx(1.0 / 9.0));
    double level2 = 0.0;
    for (const auto& w : t.level(2)) level2 += mu.at(w);
    CHECK(level2 == doctest::Approx(1.0));
    StarTree uneven(2);
    uneven.add_child({}, {0});
    CHECK_THROWS_AS(natural_measure(uneven, 0.25, 0.5), Error);
}

TEST_CASE("percolation defaults") {
    CHECK(percolation_defaults(2, 3, 2) == std::pair<std::size_t, std::size_t>{7, 2});
    CHECK(percolation_defaults(3, 3, 2) == std::pair<std::size_t, std::size_t>{4, 2});
    CHECK(percolation_defaults(4, 3, 2) == std::pair<std::size_t, std::size_t>{4, 2});
    CHECK(percolation_defaults(std::sqrt(10.0), 3, 2) == std::pair<std::size_t, std::size_t>{4, 2});
    // 2.5^k is never an integer, however large the double gets.
    CHECK_THROWS_AS(percolation_defaults(2.5, 3, 2), Error);
}

TEST_CASE("percolation pipeline output invariants") {
    PercolationParams P;
    P.c = 3;
    P.seed = 1;
    auto s = percolation_pipeline(P);
    CHECK(s.arity == 81);
    CHECK(s.height == 2);
    CHECK(s.alpha == doctest::Approx(1.0));
    CHECK(s.beta > 0.0);
    check_exact_arity(s.subtree, s.arity, s.height);
    check_measure(s);
    OffspringDistribution w = OffspringDistribution::binomial(9, P.p);
    check_in_sample(s, GWOracle(w, derive_seed(P.seed, "percolation-tree")));
    auto rep = empirical_diffuse_check(s.cloud, s.beta, geometric_ladder(s.xi_min, s.xi_max, 3), 100, 3);
    CHECK(rep.pass);
    CHECK(rep.tested >= 200);
    auto again = percolation_pipeline(P);
    CHECK(again.subtree == s.subtree);
    CHECK(again.root == s.root);

    PercolationParams bad = P;
    bad.c = 7;
    CHECK_THROWS_AS(percolation_pipeline(bad), Error);
    bad = P;
    bad.c = 2.5;
    CHECK_THROWS_AS(percolation_pipeline(bad), Error);
}

TEST_CASE("general pipeline output invariants") {
    auto ifs = sierpinski_ifs();
    auto w = OffspringDistribution::bernoulli({0.9, 0.9, 0.9});
    GeneralParams P;
    P.rho = 1.0 / 64.0;
    P.alpha = 7.0 / 6.0;
    auto s = general_pipeline(ifs, w, P);
    CHECK(s.arity == 128);
    check_exact_arity(s.subtree, s.arity, s.height);
    check_measure(s);
    check_in_sample(s, GWOracle(w, derive_seed(P.seed, "general-tree")));
    auto rep = empirical_diffuse_check(s.cloud, s.beta, geometric_ladder(s.xi_min, s.xi_max, 3), 100, 3);
    CHECK(rep.pass);

    GeneralParams too_big = P;
    too_big.alpha = 1.6;
    try {
        general_pipeline(ifs, w, too_big);
        FAIL("expected invalid input");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidInput);
    }
    GeneralParams not_integer = P;
    not_integer.alpha = 1.1;
    CHECK_THROWS_AS(general_pipeline(ifs, w, not_integer), Error);
}

TEST_CASE("not-found reports the predicted presence") {
    PercolationParams P;
    P.p = 0.5;
    P.c = 4;
    P.scan_levels = 0;
    P.seed = 3;
    try {
        auto s = percolation_pipeline(P);
        check_exact_arity(s.subtree, s.arity, s.height);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotFound);
        CHECK(std::string(e.what()).find("predicted") != std::string::npos);
    }
}
