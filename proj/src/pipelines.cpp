#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "gwfract/error.hpp"
#include "gwfract/extraction.hpp"
#include "gwfract/fixpoint.hpp"

namespace gwf {

namespace {

// Absolute tolerance; beyond 1e12 a double no longer resolves the fractional part reliably.
bool is_integer(double x) { return std::fabs(x) <= 1e12 && std::fabs(x - std::round(x)) <= 1e-7; }

std::size_t ipow(std::size_t base, std::size_t e) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < e; ++i) r *= base;
    return r;
}

// First vertex v (BFS over compressed levels, lexicographic within a level) with good_n(v).
std::optional<Word> scan(SubtreeSearch& search, const TreeView& view, std::size_t n, std::size_t levels,
                         std::size_t limit, std::size_t& scanned) {
    std::vector<Word> frontier{Word{}};
    for (std::size_t level = 0; level <= levels && !frontier.empty(); ++level) {
        for (const Word& v : frontier) {
            ++scanned;
            if (search.good(v, n)) return v;
            if (scanned >= limit) return std::nullopt;
        }
        if (level == levels) break;
        std::vector<Word> next;
        for (const Word& v : frontier) {
            view.for_each_child(v, [&](const Word& s) {
                next.push_back(concat(v, s));
                return next.size() < limit;
            });
            if (next.size() >= limit) break;
        }
        frontier = std::move(next);
    }
    return std::nullopt;
}

void finish(ExtractedSubset& out, const Word& root, StarTree subtree, double rho_root, std::size_t n) {
    out.root = root;
    out.subtree = std::move(subtree);
    out.height = n;
    out.measure = natural_measure(out.subtree, out.rho, out.alpha);
    out.cloud = render(out.ifs, out.subtree, root);
    const double leaf = std::pow(static_cast<double>(out.arity), -static_cast<double>(n));
    out.masses.assign(out.cloud.size(), leaf);
    const double diam = out.ifs.diameter_bound() * rho_root;
    out.xi_max = diam / 2.0;
    out.xi_min = std::min(out.xi_max, 2.0 * diam * std::pow(out.rho, static_cast<double>(n) - 1.0));
}

}  // namespace

std::pair<std::size_t, std::size_t> percolation_defaults(double c, int b, int d) {
    require(c > 1.0, "c must exceed 1");
    const double need = std::pow(static_cast<double>(b), 2.0 * d);
    for (std::size_t k = 2; k <= 64; ++k) {
        double ck = std::pow(c, static_cast<double>(k));
        if (is_integer(ck) && std::floor(ck + 1e-9) >= need) return {k, 2};
    }
    fail(ErrorKind::InvalidInput, "no k <= 64 with c^k an integer >= b^{2d}");
}

ExtractedSubset percolation_pipeline(const PercolationParams& P, Exec) {
    require(P.b >= 2 && P.d >= 1 && P.d <= kMaxDim, "percolation needs b >= 2 and 1 <= d <= 8");
    require(P.p > 0.0 && P.p <= 1.0, "p must lie in (0,1]");
    const std::size_t N = ipow(static_cast<std::size_t>(P.b), static_cast<std::size_t>(P.d));
    const double m = P.p * static_cast<double>(N);
    require(m > 1.0, "percolation must be supercritical (p b^d > 1)");
    require(P.c > 1.0 && P.c < m, "c must lie in (1, m) with m = p b^d");
    auto [k, n] = percolation_defaults(P.c, P.b, P.d);
    if (P.k) k = P.k;
    if (P.n) n = P.n;
    require(n >= 1, "at least one compressed level is required");
    const double ck = std::pow(P.c, static_cast<double>(k));
    require(is_integer(ck), "c^k must be an integer");
    const std::size_t quota = static_cast<std::size_t>(std::llround(ck));
    require(quota >= ipow(N, 2), "c^k must be at least b^{2d}");

    const auto offspring = OffspringDistribution::binomial(N, P.p);
    const GWOracle oracle(offspring, derive_seed(P.seed, "percolation-tree"));
    const CompressedOracleView view(oracle, k);

    ExtractedSubset out;
    out.ifs = percolation_ifs(P.b, P.d);
    out.arity = quota;
    out.rho = std::pow(static_cast<double>(P.b), -static_cast<double>(k));
    out.alpha = std::log(P.c) / std::log(static_cast<double>(P.b));

    // Fixed-point prediction for the cardinality part of the predicate.
    double q = 0.0;
    bool exact = true;
    for (std::size_t i = 0; i < n; ++i) {
        auto g = g_k_a(offspring, k, quota, q, 20000, derive_seed(P.seed, "predict"));
        exact = exact && g.exact;
        q = g.value;
    }
    out.predicted_presence = 1.0 - q;

    std::shared_ptr<SubtreePredicate> pred;
    std::shared_ptr<BalancedBlockPredicate> balanced;
    const double sqrt_d = std::sqrt(static_cast<double>(P.d));
    if (P.mode == "balanced") {
        require(P.c0 > 0.0, "c0 must be positive");
        balanced = std::make_shared<BalancedBlockPredicate>(oracle, P.b, P.d, k, P.c, quota, P.c0, P.attempts,
                                                            derive_seed(P.seed, "selection"));
        pred = balanced;
        out.child_constant = P.c0;
        out.method = "percolation/balanced";
    } else if (P.mode == "block") {
        pred = std::make_shared<IntersectionPredicate>(std::vector<std::shared_ptr<BuilderPredicate>>{
            std::make_shared<DiffuseBlockPredicate>(N, k), std::make_shared<CardinalityPredicate>(quota, "cardinality")});
        // A complete block aΛ² is φ_a applied to the two-level grid, which is (I^d, c2)-diffuse.
        std::vector<SimilarityMap> maps;
        for (std::size_t j = 0; j < N * N; ++j) maps.push_back(word_map(out.ifs, block_word(j, 2, N)));
        PointCloud cube;
        cube.d = P.d;
        for (int mask = 0; mask < (1 << P.d); ++mask) {
            Vec v(P.d);
            for (int j = 0; j < P.d; ++j) v[j] = (mask >> j) & 1;
            cube.push(v);
        }
        const double c2 = diffuseness_constant(maps, cube).c_low;
        out.child_constant = c2 * std::pow(static_cast<double>(P.b), -static_cast<double>(k - 2));
        out.method = "percolation/block";
    } else {
        fail(ErrorKind::InvalidInput, "unknown percolation mode '" + P.mode + "' (balanced|block)");
    }
    out.beta = out.child_constant * out.rho / sqrt_d;

    SubtreeSearch search(view, *pred, P.node_budget);
    std::size_t scanned = 0;
    auto root = scan(search, view, n, P.scan_levels, 4096, scanned);
    out.scanned = scanned;
    out.evaluations = search.evaluations();
    if (!root) {
        std::ostringstream msg;
        msg << "no " << pred->describe() << " subtree of length " << n << " found after scanning " << scanned
            << " vertices; fixed-point predicted presence " << out.predicted_presence;
        fail(ErrorKind::NotFound, msg.str());
    }
    auto subtree = search.extract(*root, n);
    std::ostringstream notes;
    notes << "k=" << k << " n=" << n << " predicate=" << pred->describe()
          << (exact ? "" : " prediction=monte-carlo");
    if (balanced) notes << " certifications=" << balanced->certifications() << " min_c_low=" << balanced->min_constant();
    out.notes = notes.str();
    finish(out, *root, std::move(*subtree), std::pow(static_cast<double>(P.b), -static_cast<double>(root->size())), n);
    return out;
}

ExtractedSubset general_pipeline(const SimilarityIFS& ifs, const OffspringDistribution& offspring,
                                 const GeneralParams& P, Exec exec) {
    require(offspring.alphabet_size() == ifs.size(), "offspring alphabet and IFS size differ");
    const WeightedAlphabet weights = ifs.weights();
    require(offspring.mean() > 1.0, "offspring law must be supercritical");
    require(P.rho > 0.0 && P.rho < weights.r_min(), "rho must lie in (0, r_min)");
    require(P.alpha > 0.0, "alpha must be positive");
    require(P.n >= 1, "at least one compressed level is required");
    const double delta = moran_exponent(offspring, weights);
    require(P.alpha < delta, "alpha must be below the Moran exponent " + std::to_string(delta));
    const double A = std::pow(P.rho, -P.alpha);
    require(is_integer(A), "rho^-alpha must be an integer");
    const std::size_t arity = static_cast<std::size_t>(std::llround(A));
    const std::size_t n0 = static_cast<std::size_t>(
        std::ceil(2.0 * std::log(weights.r_min()) / std::log(weights.r_max()) - 1e-12));
    require(static_cast<double>(arity) >= std::pow(static_cast<double>(ifs.size()), static_cast<double>(n0)),
            "rho^-alpha must be at least |Lambda|^n0");

    // Attractor cloud used as F, sized to about 2e5 points.
    std::size_t depth = P.render_depth;
    while (depth > 1 && std::pow(static_cast<double>(ifs.size()), static_cast<double>(depth)) > 2e5) --depth;
    const PointCloud F = render_full(ifs, depth);
    require(width(F).w > F.eps, "attractor is planar at the rendered resolution");

    // Shallowest power Λ^len whose maps carry a positive certified (K,c) constant.
    std::size_t len = 0;
    double c_sec = 0.0;
    for (std::size_t l = 1; l <= P.max_reduction && ipow(ifs.size(), l) <= 4096; ++l) {
        std::vector<SimilarityMap> maps;
        for (std::size_t j = 0; j < ipow(ifs.size(), l); ++j) maps.push_back(word_map(ifs, block_word(j, l, ifs.size())));
        DiffuseOptions opts;
        opts.exec = exec;
        const double c_low = diffuseness_constant(maps, F, opts).c_low;
        if (c_low > 0.0 && (P.c <= 0.0 || c_low > P.c)) {
            len = l;
            c_sec = c_low;
            break;
        }
    }
    if (len == 0) fail(ErrorKind::Capability, "no section power up to the reduction cap is certifiably diffuse");
    const double c = P.c > 0.0 ? P.c : 0.5 * c_sec;
    require(std::pow(weights.r_max(), static_cast<double>(len)) > P.rho,
            "rho is too large for the section reduction");

    const GWOracle oracle(offspring, derive_seed(P.seed, "general-tree"));
    const SectionOracleView view(oracle, weights, P.rho);
    auto diffuse = std::make_shared<SectionDiffusePredicate>(ifs, F, len, c);
    IntersectionPredicate pred({diffuse, std::make_shared<CardinalityPredicate>(arity, "cardinality")});

    ExtractedSubset out;
    out.ifs = ifs;
    out.arity = arity;
    out.rho = P.rho;
    out.alpha = P.alpha;
    out.child_constant = c;
    out.beta = P.rho * c * std::pow(weights.r_min(), static_cast<double>(len)) / ifs.diameter_bound();
    out.method = "general";

    // Fixed-point prediction for the cardinality part, sup over realized a-values.
    StarFamily family{[arity](const Word&, double) { return arity; }};
    double q = 0.0;
    for (std::size_t i = 0; i < P.n; ++i) q = star_sup_g(weights, P.rho, offspring, family, q).sup;
    out.predicted_presence = 1.0 - q;

    SubtreeSearch search(view, pred, P.node_budget);
    std::size_t scanned = 0;
    auto root = scan(search, view, P.n, P.scan_levels, 4096, scanned);
    out.scanned = scanned;
    out.evaluations = search.evaluations();
    if (!root) {
        std::ostringstream msg;
        msg << "no " << pred.describe() << " *-subtree of height " << P.n << " found after scanning " << scanned
            << " vertices; fixed-point predicted presence " << out.predicted_presence;
        fail(ErrorKind::NotFound, msg.str());
    }
    auto subtree = search.extract(*root, P.n);
    std::ostringstream notes;
    notes << "reduction=" << len << " section_constant=" << c_sec << " c=" << c << " delta=" << delta
          << " certifications=" << diffuse->certifications();
    out.notes = notes.str();
    finish(out, *root, std::move(*subtree), weights.weight(*root), P.n);
    return out;
}

}  // namespace gwf
