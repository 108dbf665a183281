#include <cmath>
#include <set>

#include "doctest.h"
#include "gwfract/branching.hpp"
#include "gwfract/error.hpp"
#include "gwfract/symbolic.hpp"

using namespace gwf;

namespace {

// Every word up to max_len, shortest first.
std::vector<Word> words_up_to(std::size_t n, std::size_t max_len) {
    std::vector<Word> out{Word{}};
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].size() == max_len) continue;
        for (Letter l = 0; l < n; ++l) {
            Word w = out[i];
            w.push_back(l);
            out.push_back(w);
        }
    }
    return out;
}

// Π_σ straight from the definition, by enumeration.
std::set<Word> section_by_definition(const WeightedAlphabet& wa, double sigma, std::size_t max_len) {
    std::set<Word> out;
    for (const auto& w : words_up_to(wa.size(), max_len)) {
        if (w.empty()) continue;
        Word parent(w.begin(), w.end() - 1);
        if (wa.weight(w) <= sigma * (1 + 1e-12) && wa.weight(parent) > sigma * (1 + 1e-12)) out.insert(w);
    }
    return out;
}

}  // namespace

TEST_CASE("words: concatenation, prefixes and text form") {
    Word a{1, 2}, b{0};
    CHECK(concat(a, b) == Word{1, 2, 0});
    CHECK(is_prefix(a, Word{1, 2, 3}));
    CHECK_FALSE(is_prefix(Word{2}, Word{1, 2}));
    CHECK(is_prefix(Word{}, a));
    CHECK(word_to_string(Word{}) == "-");
    for (const Word& w : {Word{}, Word{0}, Word{3, 11, 0, 7}}) CHECK(word_from_string(word_to_string(w)) == w);
    CHECK_THROWS_AS(word_from_string("1.x"), Error);
}

TEST_CASE("weighted alphabet") {
    WeightedAlphabet wa({0.5, 0.25, 0.2});
    CHECK(wa.r_min() == doctest::Approx(0.2));
    CHECK(wa.r_max() == doctest::Approx(0.5));
    CHECK(wa.weight({0, 1, 2}) == doctest::Approx(0.025));
    CHECK(wa.weight({}) == 1.0);
    CHECK_THROWS_AS(WeightedAlphabet({0.5, 1.0}), Error);
    CHECK_THROWS_AS(WeightedAlphabet(std::vector<double>{}), Error);
}

TEST_CASE("sections agree with the definition") {
    SUBCASE("uniform ratios give full levels") {
        auto wa = WeightedAlphabet::uniform(3, 1.0 / 3.0);
        auto sec = section_pi_rho(wa, 1.0 / 9.0);
        CHECK(sec.size() == 9);
        for (const auto& w : sec) CHECK(w.size() == 2);
    }
    SUBCASE("non-uniform ratios") {
        WeightedAlphabet wa({0.5, 0.3, 0.2});
        for (double rho : {0.15, 0.05, 0.011}) {
            auto sec = section_pi_rho(wa, rho);
            std::set<Word> got(sec.begin(), sec.end());
            CHECK(got == section_by_definition(wa, rho, 12));
            CHECK(std::is_sorted(sec.begin(), sec.end()));
            CHECK(validate_section(wa.size(), sec));
            for (const auto& w : sec) {
                CHECK(in_section(wa, rho, w));
                CHECK(wa.weight(w) > rho * wa.r_min());
            }
        }
    }
    SUBCASE("rho must lie below r_min") {
        WeightedAlphabet wa({0.5, 0.3});
        CHECK_THROWS_AS(section_pi_rho(wa, 0.4), Error);
    }
    SUBCASE("node budget") {
        auto wa = WeightedAlphabet::uniform(4, 0.25);
        try {
            section_pi_rho(wa, std::pow(0.25, 10), 1000);
            FAIL("expected a resource limit");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::ResourceLimit);
        }
    }
}

TEST_CASE("section validation rejects non-covers") {
    CHECK(validate_section(2, {{0}, {1, 0}, {1, 1}}));
    CHECK_FALSE(validate_section(2, {{0}, {1, 0}}));
    CHECK_FALSE(validate_section(2, {{0}, {0, 1}, {1}}));
    CHECK_THROWS_AS(validate_section(2, {}), Error);
}

TEST_CASE("rho index") {
    auto wa = WeightedAlphabet::uniform(3, 1.0 / 3.0);
    auto e = rho_index(wa, 1.0 / 3.0 - 1e-9, {});
    CHECK(e.n == 0);
    CHECK(e.a == 1.0);
    WeightedAlphabet two({0.5, 0.25});
    const double rho = 0.2;
    for (const auto& w : words_up_to(2, 7)) {
        if (w.empty()) continue;
        std::size_t hits = 0;
        for (std::size_t n = 1; n <= 8; ++n) hits += in_section(two, std::pow(rho, n), w) ? 1 : 0;
        if (hits == 0) {
            CHECK_THROWS_AS(rho_index(two, rho, w), Error);
            continue;
        }
        auto ri = rho_index(two, rho, w);
        CHECK(in_section(two, std::pow(rho, ri.n), w));
        CHECK(ri.a > two.r_min());
        CHECK(ri.a <= 1.0 + 1e-12);
    }
}

TEST_CASE("block words are big-endian") {
    CHECK(block_index({1, 0}, 0, 2, 3) == 3);
    CHECK(block_index({0, 1}, 0, 2, 3) == 1);
    for (std::uint64_t i = 0; i < 27; ++i) CHECK(block_index(block_word(i, 3, 3), 0, 3, 3) == i);
}

TEST_CASE("k-compression keeps levels k*n") {
    auto w = OffspringDistribution::binomial(4, 0.7);
    auto s = sample_gw(w, 6, 99);
    for (std::size_t k : {1, 2, 3}) {
        FiniteTree c = compress_k(s.tree, k);
        CHECK(c.alphabet_size() == 4 * (k == 1 ? 1 : (k == 2 ? 4 : 16)));
        for (std::size_t n = 0; n * k <= 6; ++n) {
            std::set<Word> want;
            for (const auto& x : s.tree.level(n * k)) {
                Word blocks;
                for (std::size_t j = 0; j < n; ++j) blocks.push_back(static_cast<Letter>(block_index(x, j * k, k, 4)));
                want.insert(blocks);
            }
            auto lvl = c.level(n);
            CHECK(std::set<Word>(lvl.begin(), lvl.end()) == want);
        }
    }
}

TEST_CASE("compression along sections") {
    auto w = OffspringDistribution::binomial(2, 0.85);
    auto s = sample_gw(w, 12, 5);
    SUBCASE("uniform ratios reduce to block compression") {
        auto wa = WeightedAlphabet::uniform(2, 0.5);
        StarTree st = compress_along_pi_rho(s.tree, wa, 0.25, 3);
        for (std::size_t h = 0; h <= 3; ++h) {
            auto lvl = st.level(h);
            auto want = s.tree.level(2 * h);
            CHECK(std::set<Word>(lvl.begin(), lvl.end()) == std::set<Word>(want.begin(), want.end()));
        }
    }
    SUBCASE("heights match rho_index and levels match T ∩ Π") {
        WeightedAlphabet wa({0.5, 0.25});
        const double rho = 0.2;
        std::size_t H = max_usable_height(wa, rho, 12);
        REQUIRE(H >= 1);
        StarTree st = compress_along_pi_rho(s.tree, wa, rho, H);
        for (const auto& [word, node] : st.nodes()) {
            if (word.empty()) continue;
            CHECK(rho_index(wa, rho, word).n == node.height);
            CHECK(s.tree.contains(word));
        }
        for (std::size_t h = 1; h <= H; ++h) {
            std::set<Word> want;
            for (const auto& x : section_pi_rho(wa, std::pow(rho, h)))
                if (s.tree.contains(x)) want.insert(x);
            auto lvl = st.level(h);
            CHECK(std::set<Word>(lvl.begin(), lvl.end()) == want);
        }
        CHECK_THROWS_AS(compress_along_pi_rho(s.tree, wa, rho, H + 1), Error);
    }
}

TEST_CASE("tree text formats round-trip") {
    auto s = sample_gw(OffspringDistribution::binomial(3, 0.8), 4, 11);
    CHECK(FiniteTree::from_text(s.tree.to_text()) == s.tree);
    StarTree st(3);
    st.add_child({}, {0, 1});
    st.add_child({}, {2});
    st.add_child({0, 1}, {1, 1, 0});
    CHECK(StarTree::from_text(st.to_text()) == st);
    CHECK(st.height({0, 1, 1, 1, 0}) == 2);
    CHECK(st.max_height() == 2);
    CHECK_THROWS_AS(FiniteTree::from_text("garbage"), Error);
}
