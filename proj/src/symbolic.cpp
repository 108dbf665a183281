#include "gwfract/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <cstdio>
#include <sstream>

#include "gwfract/error.hpp"

namespace gwf {

Word concat(const Word& a, const Word& b) {
    Word out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

bool is_prefix(const Word& prefix, const Word& w) {
    return prefix.size() <= w.size() && std::equal(prefix.begin(), prefix.end(), w.begin());
}

std::string word_to_string(const Word& w) {
    if (w.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) s.push_back('-');
        s += std::to_string(w[i]);
    }
    return s;
}

Word word_from_string(const std::string& s) {
    Word w;
    if (s == "-" || s.empty()) return w;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t next = s.find('-', pos);
        std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        require(!tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos,
                "malformed word '" + s + "'");
        w.push_back(static_cast<Letter>(std::stoul(tok)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return w;
}

WeightedAlphabet::WeightedAlphabet(std::vector<double> ratios) : r_(std::move(ratios)) {
    require(!r_.empty(), "weighted alphabet must be nonempty");
    for (double r : r_) require(r > 0.0 && r < 1.0, "weights must lie in (0,1)");
    r_min_ = *std::min_element(r_.begin(), r_.end());
    r_max_ = *std::max_element(r_.begin(), r_.end());
}

WeightedAlphabet WeightedAlphabet::uniform(std::size_t n, double r) {
    return WeightedAlphabet(std::vector<double>(n, r));
}

double WeightedAlphabet::weight(const Word& w) const {
    double r = 1.0;
    for (Letter l : w) {
        require(l < r_.size(), "letter out of range");
        r *= r_[l];
    }
    return r;
}

// ---------------------------------------------------------------- FiniteTree

FiniteTree::FiniteTree(std::size_t alphabet_size, std::size_t depth) : alphabet_(alphabet_size), depth_(depth) {
    require(alphabet_size > 0, "alphabet must be nonempty");
    children_[Word{}] = {};
}

const std::vector<Letter>& FiniteTree::children(const Word& w) const {
    auto it = children_.find(w);
    require(it != children_.end(), "node " + word_to_string(w) + " not in tree");
    return it->second;
}

void FiniteTree::insert(const Word& w) {
    require(w.size() <= depth_, "word longer than tree depth");
    Word prefix;
    for (std::size_t i = 0; i < w.size(); ++i) {
        require(w[i] < alphabet_, "letter out of range");
        auto& kids = children_[prefix];
        auto pos = std::lower_bound(kids.begin(), kids.end(), w[i]);
        if (pos == kids.end() || *pos != w[i]) kids.insert(pos, w[i]);
        prefix.push_back(w[i]);
        children_.try_emplace(prefix);
    }
}

void FiniteTree::set_children(const Word& w, std::vector<Letter> letters) {
    require(contains(w), "node " + word_to_string(w) + " not in tree");
    require(letters.empty() || w.size() < depth_, "children below maximal depth");
    std::sort(letters.begin(), letters.end());
    letters.erase(std::unique(letters.begin(), letters.end()), letters.end());
    for (Letter l : letters) require(l < alphabet_, "letter out of range");
    Word child = w;
    child.push_back(0);
    for (Letter l : letters) {
        child.back() = l;
        children_.try_emplace(child);
    }
    children_[w] = std::move(letters);
}

std::vector<Word> FiniteTree::level(std::size_t n) const {
    std::vector<Word> out;
    for (const auto& [w, kids] : children_)
        if (w.size() == n) out.push_back(w);
    return out;
}

std::vector<std::size_t> FiniteTree::level_sizes() const {
    std::vector<std::size_t> sizes(depth_ + 1, 0);
    for (const auto& [w, kids] : children_) ++sizes[w.size()];
    return sizes;
}

std::vector<Word> FiniteTree::nodes() const {
    std::vector<Word> out;
    out.reserve(children_.size());
    for (const auto& [w, kids] : children_) out.push_back(w);
    return out;
}

std::string FiniteTree::to_text() const {
    std::string out = "tree alphabet=" + std::to_string(alphabet_) + " depth=" + std::to_string(depth_) + "\n";
    for (const auto& [w, kids] : children_) {
        out += word_to_string(w);
        out.push_back('\n');
    }
    return out;
}

FiniteTree FiniteTree::from_text(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    std::size_t alphabet = 0, depth = 0;
    require(std::sscanf(header.c_str(), "tree alphabet=%zu depth=%zu", &alphabet, &depth) == 2,
            "missing tree header");
    FiniteTree t(alphabet, depth);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.insert(word_from_string(line));
    }
    return t;
}

// ---------------------------------------------------------------- StarTree

StarTree::StarTree(std::size_t alphabet_size) : alphabet_(alphabet_size) { nodes_[Word{}] = Node{}; }

std::size_t StarTree::max_height() const {
    std::size_t h = 0;
    for (const auto& [w, n] : nodes_) h = std::max(h, n.height);
    return h;
}

std::size_t StarTree::height(const Word& w) const {
    auto it = nodes_.find(w);
    require(it != nodes_.end(), "node " + word_to_string(w) + " not in *-tree");
    return it->second.height;
}

const std::vector<Word>& StarTree::children(const Word& w) const {
    auto it = nodes_.find(w);
    require(it != nodes_.end(), "node " + word_to_string(w) + " not in *-tree");
    return it->second.children;
}

void StarTree::add_child(const Word& parent, const Word& suffix) {
    auto it = nodes_.find(parent);
    require(it != nodes_.end(), "parent " + word_to_string(parent) + " not in *-tree");
    require(!suffix.empty(), "*-tree child suffix must be nonempty");
    Word child = concat(parent, suffix);
    require(!nodes_.count(child), "duplicate *-tree node " + word_to_string(child));
    std::size_t h = it->second.height + 1;
    auto& kids = it->second.children;
    kids.insert(std::lower_bound(kids.begin(), kids.end(), suffix), suffix);
    nodes_[child] = Node{h, {}};
}

std::vector<Word> StarTree::level(std::size_t h) const {
    std::vector<Word> out;
    for (const auto& [w, n] : nodes_)
        if (n.height == h) out.push_back(w);
    return out;
}

std::string StarTree::to_text() const {
    std::string out = "startree alphabet=" + std::to_string(alphabet_) + "\n";
    for (const auto& [w, n] : nodes_) {
        out += std::to_string(n.height);
        out.push_back(' ');
        out += word_to_string(w);
        out.push_back('\n');
    }
    return out;
}

StarTree StarTree::from_text(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    std::getline(in, header);
    std::size_t alphabet = 0;
    require(std::sscanf(header.c_str(), "startree alphabet=%zu", &alphabet) == 1, "missing *-tree header");
    std::vector<std::pair<std::size_t, Word>> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t h;
        std::string ws;
        require(static_cast<bool>(ls >> h >> ws), "malformed *-tree line '" + line + "'");
        entries.emplace_back(h, word_from_string(ws));
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    StarTree t(alphabet);
    for (const auto& [h, w] : entries) {
        if (h == 0) {
            require(w.empty(), "only the root has height 0");
            continue;
        }
        bool placed = false;
        for (std::size_t len = w.size(); len-- > 0;) {
            Word p(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(len));
            auto it = t.nodes_.find(p);
            if (it != t.nodes_.end() && it->second.height + 1 == h) {
                t.add_child(p, Word(w.begin() + static_cast<std::ptrdiff_t>(len), w.end()));
                placed = true;
                break;
            }
        }
        require(placed, "node " + word_to_string(w) + " has no parent of height " + std::to_string(h - 1));
    }
    return t;
}

bool StarTree::operator==(const StarTree& o) const {
    if (alphabet_ != o.alphabet_ || nodes_.size() != o.nodes_.size()) return false;
    for (auto a = nodes_.begin(), b = o.nodes_.begin(); a != nodes_.end(); ++a, ++b) {
        if (a->first != b->first || a->second.height != b->second.height ||
            a->second.children != b->second.children)
            return false;
    }
    return true;
}

// ---------------------------------------------------------------- sections

bool validate_section(std::size_t alphabet_size, const std::vector<Word>& candidate) {
    require(alphabet_size > 0, "alphabet must be nonempty");
    require(!candidate.empty(), "candidate section is empty");
    for (const Word& w : candidate)
        for (Letter l : w) require(l < alphabet_size, "letter out of range in " + word_to_string(w));

    std::vector<Word> sorted = candidate;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    // In lexicographic order a prefix is immediately followed by one of its extensions.
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (is_prefix(sorted[i], sorted[i + 1])) return false;

    std::set<Word> members(sorted.begin(), sorted.end());
    std::set<Word> prefixes;
    for (const Word& w : sorted)
        for (std::size_t len = 0; len < w.size(); ++len) prefixes.insert(Word(w.begin(), w.begin() + len));

    std::function<bool(Word&)> covered = [&](Word& node) -> bool {
        if (members.count(node)) return true;
        if (!prefixes.count(node)) return false;
        for (Letter l = 0; l < alphabet_size; ++l) {
            node.push_back(l);
            bool ok = covered(node);
            node.pop_back();
            if (!ok) return false;
        }
        return true;
    };
    Word root;
    return covered(root);
}

std::vector<Word> section_below(const WeightedAlphabet& weights, double sigma, std::size_t node_budget) {
    require(sigma > 0.0, "section parameter must be positive");
    std::vector<Word> out;
    if (weight_leq(1.0, sigma)) {
        out.push_back(Word{});
        return out;
    }
    std::size_t visited = 0;
    Word w;
    std::function<void(double)> dfs = [&](double r) {
        for (Letter l = 0; l < weights.size(); ++l) {
            if (++visited > node_budget) fail(ErrorKind::ResourceLimit, "section node budget exceeded");
            double rl = r * weights[l];
            w.push_back(l);
            if (weight_leq(rl, sigma))
                out.push_back(w);
            else
                dfs(rl);
            w.pop_back();
        }
    };
    dfs(1.0);
    return out;
}

std::vector<Word> section_pi_rho(const WeightedAlphabet& weights, double rho, std::size_t node_budget) {
    require(rho > 0.0 && rho < weights.r_min(), "rho must lie in (0, r_min)");
    return section_below(weights, rho, node_budget);
}

bool in_section(const WeightedAlphabet& weights, double sigma, const Word& w) {
    double r = 1.0, parent = std::numeric_limits<double>::infinity();
    for (Letter l : w) {
        parent = r;
        r *= weights[l];
    }
    return weight_leq(r, sigma) && !weight_leq(parent, sigma);
}

std::size_t section_max_length(const WeightedAlphabet& weights, double sigma) {
    std::size_t len = 0;
    double r = 1.0;
    while (!weight_leq(r, sigma)) {
        r *= weights.r_max();
        ++len;
    }
    return len;
}

// ---------------------------------------------------------------- compression

std::uint64_t block_index(const Word& w, std::size_t begin, std::size_t k, std::size_t n) {
    std::uint64_t idx = 0;
    for (std::size_t j = 0; j < k; ++j) idx = idx * n + w[begin + j];
    return idx;
}

Word block_word(std::uint64_t index, std::size_t k, std::size_t n) {
    Word w(k);
    for (std::size_t j = k; j-- > 0;) {
        w[j] = static_cast<Letter>(index % n);
        index /= n;
    }
    return w;
}

FiniteTree compress_k(const FiniteTree& tree, std::size_t k) {
    require(k >= 1, "k must be at least 1");
    require(tree.depth() % k == 0, "tree depth " + std::to_string(tree.depth()) + " not divisible by k=" +
                                       std::to_string(k));
    const std::size_t n = tree.alphabet_size();
    long double size = std::pow(static_cast<long double>(n), static_cast<long double>(k));
    require(size <= static_cast<long double>(std::numeric_limits<Letter>::max()),
            "compressed alphabet does not fit in a letter");
    FiniteTree out(static_cast<std::size_t>(size), tree.depth() / k);
    for (const Word& w : tree.nodes()) {
        if (w.size() % k != 0 || w.empty()) continue;
        Word c(w.size() / k);
        for (std::size_t b = 0; b < c.size(); ++b) c[b] = static_cast<Letter>(block_index(w, b * k, k, n));
        out.insert(c);
    }
    return out;
}

RhoIndex rho_index(const WeightedAlphabet& weights, double rho, const Word& w) {
    require(rho > 0.0 && rho < weights.r_min(), "rho must lie in (0, r_min)");
    if (w.empty()) return {0, 1.0};
    double r = weights.weight(w);
    long n0 = static_cast<long>(std::floor(std::log(r) / std::log(rho)));
    for (long n = std::max(1L, n0 - 1); n <= n0 + 1; ++n) {
        double rn = std::pow(rho, static_cast<double>(n));
        if (in_section(weights, rn, w)) return {static_cast<std::size_t>(n), r / rn};
    }
    fail(ErrorKind::InvalidInput, "word " + word_to_string(w) + " lies in no section Π_{ρ^n}");
}

std::size_t max_usable_height(const WeightedAlphabet& weights, double rho, std::size_t depth) {
    std::size_t h = 0;
    while (section_max_length(weights, std::pow(rho, static_cast<double>(h + 1))) <= depth) ++h;
    return h;
}

StarTree compress_along_pi_rho(const FiniteTree& tree, const WeightedAlphabet& weights, double rho,
                               std::size_t height) {
    require(rho > 0.0 && rho < weights.r_min(), "rho must lie in (0, r_min)");
    require(weights.size() == tree.alphabet_size(), "weights and tree alphabet differ");
    std::size_t usable = max_usable_height(weights, rho, tree.depth());
    require(height <= usable, "tree depth " + std::to_string(tree.depth()) + " supports at most height " +
                                  std::to_string(usable));
    StarTree out(tree.alphabet_size());
    Word w;
    std::function<void(const Word&, std::size_t, double)> dfs = [&](const Word& anchor, std::size_t h,
                                                                    double r) {
        const double target = std::pow(rho, static_cast<double>(h + 1));
        for (Letter l : tree.children(w)) {
            double rl = r * weights[l];
            w.push_back(l);
            if (weight_leq(rl, target)) {
                out.add_child(anchor, Word(w.begin() + static_cast<std::ptrdiff_t>(anchor.size()), w.end()));
                if (h + 1 < height) {
                    Word next = w;
                    dfs(next, h + 1, rl);
                }
            } else {
                dfs(anchor, h, rl);
            }
            w.pop_back();
        }
    };
    if (height > 0) dfs(Word{}, 0, 1.0);
    return out;
}

}  // namespace gwf
