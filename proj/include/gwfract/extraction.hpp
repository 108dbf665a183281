#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gwfract/branching.hpp"
#include "gwfract/geometry.hpp"
#include "gwfract/symbolic.hpp"

namespace gwf {

// Read-only access to a (possibly lazy) tree whose child sets are suffix words.
class TreeView {
public:
    virtual ~TreeView() = default;
    // Calls f(suffix) for every child of w in lexicographic order until f returns false.
    virtual void for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const = 0;
    virtual std::size_t alphabet_size() const = 0;
    std::vector<Word> children(const Word& w) const;
};

class FiniteTreeView : public TreeView {
public:
    explicit FiniteTreeView(const FiniteTree& tree) : tree_(&tree) {}
    void for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const override;
    std::size_t alphabet_size() const override { return tree_->alphabet_size(); }

private:
    const FiniteTree* tree_;
};

class StarTreeView : public TreeView {
public:
    explicit StarTreeView(const StarTree& tree) : tree_(&tree) {}
    void for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const override;
    std::size_t alphabet_size() const override { return tree_->alphabet_size(); }

private:
    const StarTree* tree_;
};

// Level-k descendants of the GW tree behind an oracle (k = 1 is the tree itself).
class CompressedOracleView : public TreeView {
public:
    CompressedOracleView(const GWOracle& oracle, std::size_t k) : oracle_(&oracle), k_(k) {}
    void for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const override;
    std::size_t alphabet_size() const override { return oracle_->offspring().alphabet_size(); }
    std::size_t k() const { return k_; }

private:
    const GWOracle* oracle_;
    std::size_t k_;
};

// The GW tree compressed along Π_ρ, Π_{ρ²}, ...: children of x are its descendants in Π_{ρ/a_ρ(x)}.
class SectionOracleView : public TreeView {
public:
    SectionOracleView(const GWOracle& oracle, WeightedAlphabet weights, double rho)
        : oracle_(&oracle), weights_(std::move(weights)), rho_(rho) {}
    void for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const override;
    std::size_t alphabet_size() const override { return weights_.size(); }

private:
    const GWOracle* oracle_;
    WeightedAlphabet weights_;
    double rho_;
};

using GoodChild = std::function<bool(const Word&)>;

// A monotone collection of child sets together with a rule that picks the
// witness child set kept in an extracted subtree.
class SubtreePredicate {
public:
    virtual ~SubtreePredicate() = default;
    // Selected child suffixes if the good children of `node` form a member set.
    virtual std::optional<std::vector<Word>> select(const TreeView& view, const Word& node,
                                                    const GoodChild& good) const = 0;
    virtual std::string describe() const = 0;
};

// Incremental membership test fed with good children in lexicographic order.
class ChildSetBuilder {
public:
    virtual ~ChildSetBuilder() = default;
    virtual void add(const Word& suffix) = 0;
    virtual bool satisfied() const = 0;
    // Children that must be kept (the diffuse block or anchor); empty for cardinality rules.
    virtual std::vector<Word> core() const { return {}; }
    virtual std::size_t cardinality() const { return 0; }
};

// Predicates whose witness is core ∪ lexicographically smallest extras.
class BuilderPredicate : public SubtreePredicate {
public:
    std::optional<std::vector<Word>> select(const TreeView& view, const Word& node,
                                            const GoodChild& good) const override;
    virtual std::unique_ptr<ChildSetBuilder> start(const Word& node) const = 0;
};

// |S| >= a. `Ary` and `CardinalityAtLeast` share this rule and differ only in name.
class CardinalityPredicate : public BuilderPredicate {
public:
    explicit CardinalityPredicate(std::size_t a, std::string name = "ary") : a_(a), name_(std::move(name)) {}
    std::unique_ptr<ChildSetBuilder> start(const Word& node) const override;
    std::string describe() const override;
    std::size_t a() const { return a_; }

private:
    std::size_t a_;
    std::string name_;
};

// ∃ a ∈ Λ^{k-2} with aΛ² ⊆ X, for child suffixes of length k over an alphabet of size n.
class DiffuseBlockPredicate : public BuilderPredicate {
public:
    DiffuseBlockPredicate(std::size_t alphabet_size, std::size_t k);
    std::unique_ptr<ChildSetBuilder> start(const Word& node) const override;
    std::string describe() const override;

private:
    std::size_t n_, k_;
};

// Some prefix i has {v ∈ Λ^len : iv ∈ X} inducing a (K,c)-diffuse family of maps.
// Certificates are computed in hull mode and cached per letter set.
class SectionDiffusePredicate : public BuilderPredicate {
public:
    SectionDiffusePredicate(const SimilarityIFS& ifs, PointCloud F, std::size_t len, double c,
                            std::size_t directions = 200);
    std::unique_ptr<ChildSetBuilder> start(const Word& node) const override;
    std::string describe() const override;
    bool diffuse(const std::vector<bool>& letters) const;
    std::size_t certifications() const { return cache_.size(); }

private:
    const SimilarityIFS* ifs_;
    PointCloud F_;
    std::size_t len_;
    double c_;
    std::size_t directions_;
    std::vector<SimilarityMap> block_maps_;
    mutable std::map<std::vector<bool>, bool> cache_;
};

class IntersectionPredicate : public BuilderPredicate {
public:
    explicit IntersectionPredicate(std::vector<std::shared_ptr<BuilderPredicate>> parts) : parts_(std::move(parts)) {}
    std::unique_ptr<ChildSetBuilder> start(const Word& node) const override;
    std::string describe() const override;

private:
    std::vector<std::shared_ptr<BuilderPredicate>> parts_;
};

// Balanced selection of exactly `quota` level-k descendants, spread about c per
// generation, accepted once the selected block maps are (I^d, c0)-diffuse.
class BalancedBlockPredicate : public SubtreePredicate {
public:
    BalancedBlockPredicate(const GWOracle& oracle, int b, int d, std::size_t k, double c, std::size_t quota,
                           double c0, std::size_t attempts, std::uint64_t seed, std::size_t directions = 256);
    std::optional<std::vector<Word>> select(const TreeView& view, const Word& node,
                                            const GoodChild& good) const override;
    std::string describe() const override;
    std::size_t certifications() const { return certifications_; }
    // c_low of the last accepted selection.
    double last_constant() const { return last_c_; }
    double min_constant() const { return min_c_; }

private:
    std::size_t take(const Word& base, Word& path, std::size_t quota, std::size_t remaining,
                     std::uint64_t key, const GoodChild& good, std::vector<Word>& out) const;
    const GWOracle* oracle_;
    SimilarityIFS ifs_;
    PointCloud cube_;
    std::size_t k_;
    double c_;
    std::size_t quota_;
    double c0_;
    std::size_t attempts_;
    std::uint64_t seed_;
    std::size_t directions_;
    mutable std::size_t certifications_ = 0;
    mutable double last_c_ = 0.0;
    mutable double min_c_ = std::numeric_limits<double>::infinity();
};

// Bottom-up DP good_m(v) with memoization; children are examined lazily.
class SubtreeSearch {
public:
    SubtreeSearch(const TreeView& view, const SubtreePredicate& pred, std::size_t node_budget = kDefaultNodeBudget);

    bool good(const Word& v, std::size_t m);
    // Witness subtree of length m below v, words relative to v.
    std::optional<StarTree> extract(const Word& v, std::size_t m);
    std::size_t evaluations() const { return evaluations_; }

private:
    using Memo = std::unordered_map<Word, std::optional<std::vector<Word>>, WordHash>;
    const std::optional<std::vector<Word>>& solve(const Word& v, std::size_t m);
    const TreeView* view_;
    const SubtreePredicate* pred_;
    std::size_t budget_;
    std::size_t evaluations_ = 0;
    std::vector<Memo> memo_;
};

std::optional<StarTree> find_subtree(const TreeView& view, const SubtreePredicate& pred, std::size_t n,
                                     const Word& root = {});
// Finite-tree form: the witness as a FiniteTree of depth n (single-letter children).
std::optional<FiniteTree> find_subtree(const FiniteTree& tree, const SubtreePredicate& pred, std::size_t n);

// μ([i]) = ρ^{hα} for an exactly ρ^{-α}-ary *-tree.
std::map<Word, double> natural_measure(const StarTree& subtree, double rho, double alpha);

struct ExtractedSubset {
    StarTree subtree;  // words relative to root
    Word root;
    std::size_t arity = 0;
    std::size_t height = 0;
    double rho = 0.0;
    double alpha = 0.0;
    double beta = 0.0;             // certified diffuseness constant of the projected set
    double child_constant = 0.0;   // certified (F,c) constant required of every child set
    std::map<Word, double> measure;
    SimilarityIFS ifs;             // maps used for the projection
    PointCloud cloud;
    std::vector<double> masses;    // per cloud point
    double xi_min = 0.0, xi_max = 0.0;  // tested scale window
    std::size_t scanned = 0;
    std::size_t evaluations = 0;
    double predicted_presence = 0.0;
    std::string method;
    std::string notes;
};

struct PercolationParams {
    int b = 3;
    int d = 2;
    double p = 0.7;
    double c = 2.0;
    std::size_t k = 0;           // 0: defaults per c
    std::size_t n = 0;           // compressed heights; 0: defaults per c
    std::uint64_t seed = 1;
    std::size_t scan_levels = 2;
    std::string mode = "balanced";  // or "block"
    double c0 = 0.05;
    std::size_t attempts = 4;
    std::size_t node_budget = 50'000'000;
};

// Scan statistics kept when nothing is found.
struct ScanFailure {
    std::size_t scanned = 0;
    double predicted_presence = 0.0;
};

ExtractedSubset percolation_pipeline(const PercolationParams& params, Exec exec = Exec::Parallel);

struct GeneralParams {
    double rho = 0.0;
    double alpha = 0.0;
    double c = 0.0;               // <= 0: half the certified constant of the reduction
    std::size_t n = 2;
    std::uint64_t seed = 1;
    std::size_t scan_levels = 2;
    std::size_t max_reduction = 4;
    std::size_t render_depth = 6;  // depth of the attractor cloud used as F
    std::size_t node_budget = 50'000'000;
};

ExtractedSubset general_pipeline(const SimilarityIFS& ifs, const OffspringDistribution& offspring,
                                 const GeneralParams& params, Exec exec = Exec::Parallel);

// Default (k, n) used by the percolation pipeline for integer c.
std::pair<std::size_t, std::size_t> percolation_defaults(double c, int b, int d);

}  // namespace gwf
