#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gwfract/rng.hpp"

namespace gwf {

inline constexpr std::size_t kDefaultNodeBudget = 10'000'000;
inline constexpr double kWeightTol = 1e-12;

Word concat(const Word& a, const Word& b);
bool is_prefix(const Word& prefix, const Word& w);
std::string word_to_string(const Word& w);
Word word_from_string(const std::string& s);

// a <= b up to the relative weight tolerance; ties count as "<=".
inline bool weight_leq(double a, double b) { return a <= b * (1.0 + kWeightTol); }

class WeightedAlphabet {
public:
    WeightedAlphabet() = default;
    explicit WeightedAlphabet(std::vector<double> ratios);
    static WeightedAlphabet uniform(std::size_t n, double r);

    std::size_t size() const { return r_.size(); }
    double operator[](std::size_t i) const { return r_[i]; }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }
    double weight(const Word& w) const;
    const std::vector<double>& ratios() const { return r_; }

private:
    std::vector<double> r_;
    double r_min_ = 0.0;
    double r_max_ = 0.0;
};

// Prefix-closed finite set of words sampled to a fixed depth. Stored as a
// child-set map keyed by word; the map is ordered so iteration is lexicographic.
class FiniteTree {
public:
    FiniteTree() = default;
    FiniteTree(std::size_t alphabet_size, std::size_t depth);

    std::size_t alphabet_size() const { return alphabet_; }
    std::size_t depth() const { return depth_; }
    std::size_t node_count() const { return children_.size(); }

    bool contains(const Word& w) const { return children_.count(w) != 0; }
    const std::vector<Letter>& children(const Word& w) const;

    // Adds w and all its prefixes.
    void insert(const Word& w);
    // Replaces the child set of an existing node, inserting the children as nodes.
    void set_children(const Word& w, std::vector<Letter> letters);

    std::vector<Word> level(std::size_t n) const;
    std::vector<std::size_t> level_sizes() const;
    std::vector<Word> nodes() const;

    std::string to_text() const;
    static FiniteTree from_text(const std::string& text);

    bool operator==(const FiniteTree& o) const {
        return alphabet_ == o.alphabet_ && depth_ == o.depth_ && children_ == o.children_;
    }

private:
    std::size_t alphabet_ = 0;
    std::size_t depth_ = 0;
    std::map<Word, std::vector<Letter>> children_;
};

// Tree whose nodes are words of varying length organized by height. Child
// sets are stored as suffixes relative to the parent.
class StarTree {
public:
    struct Node {
        std::size_t height = 0;
        std::vector<Word> children;
    };

    explicit StarTree(std::size_t alphabet_size = 0);

    std::size_t alphabet_size() const { return alphabet_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t max_height() const;

    bool contains(const Word& w) const { return nodes_.count(w) != 0; }
    std::size_t height(const Word& w) const;
    const std::vector<Word>& children(const Word& w) const;

    // Registers parent·suffix as a child of parent with height h(parent)+1.
    void add_child(const Word& parent, const Word& suffix);

    std::vector<Word> level(std::size_t h) const;
    const std::map<Word, Node>& nodes() const { return nodes_; }

    std::string to_text() const;
    static StarTree from_text(const std::string& text);

    bool operator==(const StarTree& o) const;

private:
    std::size_t alphabet_;
    std::map<Word, Node> nodes_;
};

bool validate_section(std::size_t alphabet_size, const std::vector<Word>& candidate);

// Π_ρ = { i : r_i <= ρ < r_{i_1..i_{n-1}} }, lexicographically sorted.
std::vector<Word> section_pi_rho(const WeightedAlphabet& weights, double rho,
                                 std::size_t node_budget = kDefaultNodeBudget);

// Same construction for any σ in (0,1); used for the relative sections Π_{ρ/a}.
std::vector<Word> section_below(const WeightedAlphabet& weights, double sigma,
                                std::size_t node_budget = kDefaultNodeBudget);

// True iff w ∈ Π_σ.
bool in_section(const WeightedAlphabet& weights, double sigma, const Word& w);

// Length of the longest word of Π_σ.
std::size_t section_max_length(const WeightedAlphabet& weights, double sigma);

FiniteTree compress_k(const FiniteTree& tree, std::size_t k);

// Big-endian block index of a length-k word over an alphabet of size n.
std::uint64_t block_index(const Word& w, std::size_t begin, std::size_t k, std::size_t n);
Word block_word(std::uint64_t index, std::size_t k, std::size_t n);

struct RhoIndex {
    std::size_t n = 0;
    double a = 1.0;
};

RhoIndex rho_index(const WeightedAlphabet& weights, double rho, const Word& w);

// Largest N such that every word of Π_{ρ^N} has length at most depth.
std::size_t max_usable_height(const WeightedAlphabet& weights, double rho, std::size_t depth);

StarTree compress_along_pi_rho(const FiniteTree& tree, const WeightedAlphabet& weights, double rho,
                               std::size_t height);

}  // namespace gwf
