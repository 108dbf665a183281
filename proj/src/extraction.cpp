#include "gwfract/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gwfract/error.hpp"

namespace gwf {

// ---------------------------------------------------------------- views

std::vector<Word> TreeView::children(const Word& w) const {
    std::vector<Word> out;
    for_each_child(w, [&](const Word& s) {
        out.push_back(s);
        return true;
    });
    return out;
}

void FiniteTreeView::for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const {
    if (w.size() >= tree_->depth() || !tree_->contains(w)) return;
    Word s(1);
    for (Letter l : tree_->children(w)) {
        s[0] = l;
        if (!f(s)) return;
    }
}

void StarTreeView::for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const {
    if (!tree_->contains(w)) return;
    for (const Word& s : tree_->children(w))
        if (!f(s)) return;
}

void CompressedOracleView::for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const {
    require(k_ >= 1, "compression step must be positive");
    Word full = w;
    Word suffix;
    bool stop = false;
    auto dfs = [&](auto&& self) -> void {
        if (suffix.size() == k_) {
            stop = !f(suffix);
            return;
        }
        for (Letter l : oracle_->children(full)) {
            full.push_back(l);
            suffix.push_back(l);
            self(self);
            suffix.pop_back();
            full.pop_back();
            if (stop) return;
        }
    };
    dfs(dfs);
}

void SectionOracleView::for_each_child(const Word& w, const std::function<bool(const Word&)>& f) const {
    const RhoIndex idx = rho_index(weights_, rho_, w);
    const double target = std::pow(rho_, static_cast<double>(idx.n + 1));
    Word full = w;
    Word suffix;
    bool stop = false;
    auto dfs = [&](auto&& self, double r) -> void {
        if (!suffix.empty() && weight_leq(r, target)) {
            stop = !f(suffix);
            return;
        }
        for (Letter l : oracle_->children(full)) {
            full.push_back(l);
            suffix.push_back(l);
            self(self, r * weights_[l]);
            suffix.pop_back();
            full.pop_back();
            if (stop) return;
        }
    };
    dfs(dfs, weights_.weight(w));
}

// ---------------------------------------------------------------- builder predicates

std::optional<std::vector<Word>> BuilderPredicate::select(const TreeView& view, const Word& node,
                                                          const GoodChild& good) const {
    auto builder = start(node);
    std::vector<Word> goods;
    if (!builder->satisfied()) {
        view.for_each_child(node, [&](const Word& s) {
            if (good(s)) {
                goods.push_back(s);
                builder->add(s);
            }
            return !builder->satisfied();
        });
    }
    if (!builder->satisfied()) return std::nullopt;
    std::vector<Word> sel = builder->core();
    std::set<Word> taken(sel.begin(), sel.end());
    const std::size_t target = std::max(builder->cardinality(), sel.size());
    for (const Word& g : goods) {
        if (sel.size() >= target) break;
        if (taken.insert(g).second) sel.push_back(g);
    }
    std::sort(sel.begin(), sel.end());
    return sel;
}

namespace {

class CountBuilder : public ChildSetBuilder {
public:
    explicit CountBuilder(std::size_t a) : a_(a) {}
    void add(const Word&) override { ++count_; }
    bool satisfied() const override { return count_ >= a_; }
    std::size_t cardinality() const override { return a_; }

private:
    std::size_t a_;
    std::size_t count_ = 0;
};

class BlockBuilder : public ChildSetBuilder {
public:
    BlockBuilder(std::size_t n, std::size_t k) : full_(n * n), k_(k) {}
    void add(const Word& s) override {
        if (done_ || s.size() != k_) return;
        Word prefix(s.begin(), s.end() - 2);
        auto& group = groups_[prefix];
        group.push_back(s);
        if (group.size() == full_) {
            done_ = true;
            core_ = group;
        }
    }
    bool satisfied() const override { return done_; }
    std::vector<Word> core() const override { return core_; }

private:
    std::size_t full_, k_;
    bool done_ = false;
    std::map<Word, std::vector<Word>> groups_;
    std::vector<Word> core_;
};

class AnchorBuilder : public ChildSetBuilder {
public:
    AnchorBuilder(const SectionDiffusePredicate& pred, std::size_t len, std::size_t n) : pred_(&pred), len_(len), n_(n) {}
    void add(const Word& s) override {
        if (done_ || s.size() < len_) return;
        Word prefix(s.begin(), s.end() - static_cast<std::ptrdiff_t>(len_));
        auto& g = groups_[prefix];
        if (g.letters.empty()) {
            std::size_t total = 1;
            for (std::size_t i = 0; i < len_; ++i) total *= n_;
            g.letters.assign(total, false);
        }
        g.letters[block_index(s, s.size() - len_, len_, n_)] = true;
        g.words.push_back(s);
        if (g.words.size() >= 2 && pred_->diffuse(g.letters)) {
            done_ = true;
            core_ = g.words;
        }
    }
    bool satisfied() const override { return done_; }
    std::vector<Word> core() const override { return core_; }

private:
    struct Group {
        std::vector<bool> letters;
        std::vector<Word> words;
    };
    const SectionDiffusePredicate* pred_;
    std::size_t len_, n_;
    bool done_ = false;
    std::map<Word, Group> groups_;
    std::vector<Word> core_;
};

class AllBuilder : public ChildSetBuilder {
public:
    explicit AllBuilder(std::vector<std::unique_ptr<ChildSetBuilder>> parts) : parts_(std::move(parts)) {}
    void add(const Word& s) override {
        for (auto& p : parts_) p->add(s);
    }
    bool satisfied() const override {
        return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p->satisfied(); });
    }
    std::vector<Word> core() const override {
        std::vector<Word> out;
        for (const auto& p : parts_)
            for (const Word& w : p->core())
                if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
        return out;
    }
    std::size_t cardinality() const override {
        std::size_t a = 0;
        for (const auto& p : parts_) a = std::max(a, p->cardinality());
        return a;
    }

private:
    std::vector<std::unique_ptr<ChildSetBuilder>> parts_;
};

}  // namespace

std::unique_ptr<ChildSetBuilder> CardinalityPredicate::start(const Word&) const {
    return std::make_unique<CountBuilder>(a_);
}

std::string CardinalityPredicate::describe() const { return name_ + "(" + std::to_string(a_) + ")"; }

DiffuseBlockPredicate::DiffuseBlockPredicate(std::size_t alphabet_size, std::size_t k) : n_(alphabet_size), k_(k) {
    require(k >= 2, "diffuse block needs k >= 2");
    require(alphabet_size >= 1, "empty alphabet");
}

std::unique_ptr<ChildSetBuilder> DiffuseBlockPredicate::start(const Word&) const {
    return std::make_unique<BlockBuilder>(n_, k_);
}

std::string DiffuseBlockPredicate::describe() const {
    return "diffuse-block(n=" + std::to_string(n_) + ",k=" + std::to_string(k_) + ")";
}

SectionDiffusePredicate::SectionDiffusePredicate(const SimilarityIFS& ifs, PointCloud F, std::size_t len, double c,
                                                 std::size_t directions)
    : ifs_(&ifs), F_(hull_vertices(F)), len_(len), c_(c), directions_(directions) {
    require(len >= 1, "section length must be positive");
    require(c > 0.0, "diffuseness threshold must be positive");
    std::size_t total = 1;
    for (std::size_t i = 0; i < len; ++i) total *= ifs.size();
    require(total <= 4096, "section reduction has too many maps");
    for (std::size_t j = 0; j < total; ++j) block_maps_.push_back(word_map(ifs, block_word(j, len, ifs.size())));
}

bool SectionDiffusePredicate::diffuse(const std::vector<bool>& letters) const {
    auto it = cache_.find(letters);
    if (it != cache_.end()) return it->second;
    std::vector<SimilarityMap> maps;
    for (std::size_t j = 0; j < letters.size(); ++j)
        if (letters[j]) maps.push_back(block_maps_[j]);
    bool ok = false;
    if (maps.size() >= 2) {
        DiffuseOptions opts;
        opts.mode = DiffuseMode::Hull;
        opts.directions = directions_;
        opts.tol = 0.01 * c_;
        opts.max_evaluations = 50000;
        opts.exec = Exec::Serial;
        // Inconclusive certificates count as non-members.
        ok = diffuseness_constant(maps, F_, opts).c_low >= c_;
    }
    cache_.emplace(letters, ok);
    return ok;
}

std::unique_ptr<ChildSetBuilder> SectionDiffusePredicate::start(const Word&) const {
    return std::make_unique<AnchorBuilder>(*this, len_, ifs_->size());
}

std::string SectionDiffusePredicate::describe() const {
    return "section-diffuse(len=" + std::to_string(len_) + ",c=" + std::to_string(c_) + ")";
}

std::unique_ptr<ChildSetBuilder> IntersectionPredicate::start(const Word& node) const {
    std::vector<std::unique_ptr<ChildSetBuilder>> parts;
    for (const auto& p : parts_) parts.push_back(p->start(node));
    return std::make_unique<AllBuilder>(std::move(parts));
}

std::string IntersectionPredicate::describe() const {
    std::string s;
    for (const auto& p : parts_) s += (s.empty() ? "" : " & ") + p->describe();
    return s;
}

// ---------------------------------------------------------------- balanced blocks

BalancedBlockPredicate::BalancedBlockPredicate(const GWOracle& oracle, int b, int d, std::size_t k, double c,
                                               std::size_t quota, double c0, std::size_t attempts,
                                               std::uint64_t seed, std::size_t directions)
    : oracle_(&oracle), ifs_(percolation_ifs(b, d)), k_(k), c_(c), quota_(quota), c0_(c0), attempts_(attempts),
      seed_(seed), directions_(directions) {
    require(k >= 1 && quota >= 1, "balanced block needs k >= 1 and a positive quota");
    require(c > 1.0, "per-generation arity must exceed 1");
    require(attempts >= 1, "at least one attempt required");
    cube_.d = d;
    for (int mask = 0; mask < (1 << d); ++mask) {
        Vec v(d);
        for (int j = 0; j < d; ++j) v[j] = (mask >> j) & 1;
        cube_.push(v);
    }
}

std::size_t BalancedBlockPredicate::take(const Word& base, Word& path, std::size_t quota, std::size_t remaining,
                                         std::uint64_t key, const GoodChild& good, std::vector<Word>& out) const {
    if (quota == 0) return 0;
    if (remaining == 0) {
        if (!good(path)) return 0;
        out.push_back(path);
        return 1;
    }
    std::vector<Letter> kids = oracle_->children(concat(base, path));
    Stream rng(mix64(key ^ hash_word(path)));
    shuffle(kids, rng);
    const std::size_t share = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(quota) / c_ - 1e-9)));
    std::vector<std::vector<Word>> got(kids.size());
    std::vector<std::size_t> asked(kids.size(), 0);
    std::size_t left = quota;
    for (std::size_t i = 0; i < kids.size() && left > 0; ++i) {
        asked[i] = std::min(share, left);
        path.push_back(kids[i]);
        left -= take(base, path, asked[i], remaining - 1, key, good, got[i]);
        path.pop_back();
    }
    // Deficits are carried to children that filled their share.
    for (std::size_t i = 0; i < kids.size() && left > 0; ++i) {
        if (asked[i] == 0 || got[i].size() < asked[i]) continue;
        std::vector<Word> more;
        path.push_back(kids[i]);
        take(base, path, asked[i] + left, remaining - 1, key, good, more);
        path.pop_back();
        if (more.size() > got[i].size()) {
            left -= more.size() - got[i].size();
            got[i] = std::move(more);
        }
    }
    for (auto& g : got) out.insert(out.end(), g.begin(), g.end());
    return quota - left;
}

std::optional<std::vector<Word>> BalancedBlockPredicate::select(const TreeView&, const Word& node,
                                                                const GoodChild& good) const {
    for (std::size_t a = 0; a < attempts_; ++a) {
        const std::uint64_t key = mix64(derive_seed(seed_, a) ^ hash_word(node));
        std::vector<Word> picked;
        Word path;
        if (take(node, path, quota_, k_, key, good, picked) < quota_) return std::nullopt;
        std::vector<SimilarityMap> maps;
        for (const Word& w : picked) maps.push_back(word_map(ifs_, w));
        DiffuseOptions opts;
        opts.mode = DiffuseMode::Hull;
        opts.directions = directions_;
        opts.tol = 0.1 * c0_;
        opts.max_evaluations = 20000;
        opts.exec = Exec::Serial;
        ++certifications_;
        const double c_low = diffuseness_constant(maps, cube_, opts).c_low;
        if (c_low >= c0_) {
            last_c_ = c_low;
            min_c_ = std::min(min_c_, c_low);
            std::sort(picked.begin(), picked.end());
            return picked;
        }
    }
    return std::nullopt;
}

std::string BalancedBlockPredicate::describe() const {
    return "balanced-block(k=" + std::to_string(k_) + ",quota=" + std::to_string(quota_) +
           ",c0=" + std::to_string(c0_) + ")";
}

// ---------------------------------------------------------------- search

SubtreeSearch::SubtreeSearch(const TreeView& view, const SubtreePredicate& pred, std::size_t node_budget)
    : view_(&view), pred_(&pred), budget_(node_budget) {}

const std::optional<std::vector<Word>>& SubtreeSearch::solve(const Word& v, std::size_t m) {
    auto& memo = memo_[m];
    auto it = memo.find(v);
    if (it != memo.end()) return it->second;
    if (++evaluations_ > budget_)
        fail(ErrorKind::ResourceLimit, "subtree search exceeded its budget of " + std::to_string(budget_) + " nodes");
    std::optional<std::vector<Word>> sel;
    if (m == 0) {
        sel = std::vector<Word>{};
    } else {
        sel = pred_->select(*view_, v, [&](const Word& s) { return solve(concat(v, s), m - 1).has_value(); });
    }
    return memo_[m].emplace(v, std::move(sel)).first->second;
}

bool SubtreeSearch::good(const Word& v, std::size_t m) {
    if (memo_.size() <= m) memo_.resize(m + 1);
    return solve(v, m).has_value();
}

std::optional<StarTree> SubtreeSearch::extract(const Word& v, std::size_t m) {
    if (!good(v, m)) return std::nullopt;
    StarTree out(view_->alphabet_size());
    auto rec = [&](auto&& self, const Word& rel, std::size_t level) -> void {
        if (level == 0) return;
        const auto& sel = solve(concat(v, rel), level);
        for (const Word& s : *sel) {
            out.add_child(rel, s);
            self(self, concat(rel, s), level - 1);
        }
    };
    rec(rec, Word{}, m);
    return out;
}

std::optional<StarTree> find_subtree(const TreeView& view, const SubtreePredicate& pred, std::size_t n,
                                     const Word& root) {
    SubtreeSearch search(view, pred);
    return search.extract(root, n);
}

std::optional<FiniteTree> find_subtree(const FiniteTree& tree, const SubtreePredicate& pred, std::size_t n) {
    require(n <= tree.depth(), "requested length exceeds the tree depth");
    FiniteTreeView view(tree);
    auto star = find_subtree(view, pred, n);
    if (!star) return std::nullopt;
    FiniteTree out(tree.alphabet_size(), n);
    for (const auto& [w, node] : star->nodes())
        if (node.height == n) out.insert(w);
    return out;
}

std::map<Word, double> natural_measure(const StarTree& subtree, double rho, double alpha) {
    require(rho > 0.0 && rho < 1.0 && alpha > 0.0, "natural measure needs rho in (0,1) and alpha > 0");
    const double A = std::pow(rho, -alpha);
    const double arity = std::round(A);
    require(A <= 1e12 && std::fabs(A - arity) <= 1e-7, "rho^-alpha must be an integer");
    const std::size_t H = subtree.max_height();
    std::map<Word, double> mass;
    for (const auto& [w, node] : subtree.nodes()) {
        if (node.height < H)
            require(node.children.size() == static_cast<std::size_t>(arity),
                    "node " + word_to_string(w) + " has " + std::to_string(node.children.size()) +
                        " children, expected " + std::to_string(static_cast<std::size_t>(arity)));
        else
            require(node.children.empty(), "leaf above maximal height");
        mass[w] = std::pow(arity, -static_cast<double>(node.height));
    }
    return mass;
}

}  // namespace gwf
