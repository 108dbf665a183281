#include "gwfract/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "gwfract/error.hpp"

namespace gwf {

// ---------------------------------------------------------------- maps

SimilarityMap SimilarityMap::identity(int d) {
    SimilarityMap m;
    m.r = 1.0;
    m.O = Mat::Identity(d, d);
    m.t = Vec::Zero(d);
    return m;
}

SimilarityMap SimilarityMap::compose(const SimilarityMap& inner) const {
    SimilarityMap m;
    m.r = r * inner.r;
    m.O = O * inner.O;
    m.t = r * (O * inner.t) + t;
    return m;
}

Vec SimilarityMap::fixed_point() const {
    const int d = dim();
    Mat A = Mat::Identity(d, d) - r * O;
    return A.colPivHouseholderQr().solve(t);
}

double OscSet::distance(const Vec& x) const {
    if (kind == Kind::Ball) return std::max(0.0, (x - center).norm() - radius);
    double s = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        double e = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
        s += e * e;
    }
    return std::sqrt(s);
}

SimilarityIFS::SimilarityIFS(int d, std::vector<SimilarityMap> maps, std::optional<OscSet> osc)
    : d_(d), maps_(std::move(maps)), osc_(std::move(osc)) {
    require(d >= 1 && d <= kMaxDim, "dimension must lie in 1.." + std::to_string(kMaxDim));
    require(!maps_.empty(), "IFS needs at least one map");
    for (const auto& m : maps_) {
        require(m.dim() == d && m.O.rows() == d && m.O.cols() == d, "map dimension mismatch");
        require(m.r > 0.0 && m.r < 1.0, "contraction ratio must lie in (0,1)");
        double dev = (m.O.transpose() * m.O - Mat::Identity(d, d)).cwiseAbs().maxCoeff();
        require(dev <= 1e-10, "orthogonal part is not orthogonal");
    }
    // Ball centred at the mean of the fixed points; radius chosen so that φ_i(B) ⊆ B.
    center_ = Vec::Zero(d);
    for (const auto& m : maps_) center_ += m.fixed_point();
    center_ /= static_cast<double>(maps_.size());
    radius_ = 0.0;
    for (const auto& m : maps_) radius_ = std::max(radius_, (m.apply(center_) - center_).norm() / (1.0 - m.r));
}

WeightedAlphabet SimilarityIFS::weights() const {
    std::vector<double> r;
    for (const auto& m : maps_) r.push_back(m.r);
    return WeightedAlphabet(std::move(r));
}

bool SimilarityIFS::check_osc() const {
    if (!osc_) return false;
    const auto& U = *osc_;
    if (U.kind == OscSet::Kind::Ball) {
        for (const auto& m : maps_)
            if ((m.apply(U.center) - U.center).norm() + m.r * U.radius > U.radius * (1 + 1e-12)) return false;
        for (std::size_t i = 0; i < maps_.size(); ++i)
            for (std::size_t j = i + 1; j < maps_.size(); ++j)
                if ((maps_[i].apply(U.center) - maps_[j].apply(U.center)).norm() <
                    (maps_[i].r + maps_[j].r) * U.radius * (1 - 1e-12))
                    return false;
        return true;
    }
    // Image of a box under a similarity, enclosed by interval arithmetic on the corners.
    auto image_box = [&](const SimilarityMap& m, Vec& lo, Vec& hi) {
        lo = Vec::Constant(d_, std::numeric_limits<double>::infinity());
        hi = Vec::Constant(d_, -std::numeric_limits<double>::infinity());
        for (int mask = 0; mask < (1 << d_); ++mask) {
            Vec c(d_);
            for (int k = 0; k < d_; ++k) c[k] = (mask >> k) & 1 ? U.hi[k] : U.lo[k];
            Vec p = m.apply(c);
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
    };
    const double tol = 1e-12;
    std::vector<Vec> los(maps_.size()), his(maps_.size());
    for (std::size_t i = 0; i < maps_.size(); ++i) {
        image_box(maps_[i], los[i], his[i]);
        for (int k = 0; k < d_; ++k)
            if (los[i][k] < U.lo[k] - tol || his[i][k] > U.hi[k] + tol) return false;
    }
    for (std::size_t i = 0; i < maps_.size(); ++i)
        for (std::size_t j = i + 1; j < maps_.size(); ++j) {
            bool separated = false;
            for (int k = 0; k < d_; ++k)
                if (his[i][k] <= los[j][k] + tol || his[j][k] <= los[i][k] + tol) separated = true;
            if (!separated) return false;
        }
    return true;
}

SimilarityIFS percolation_ifs(int b, int d) {
    require(b >= 2, "percolation needs b >= 2");
    require(d >= 1 && d <= kMaxDim, "percolation dimension out of range");
    std::size_t n = 1;
    for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(b);
    std::vector<SimilarityMap> maps;
    for (std::size_t l = 0; l < n; ++l) {
        SimilarityMap m = SimilarityMap::identity(d);
        m.r = 1.0 / b;
        auto cell = percolation_cell(static_cast<Letter>(l), b, d);
        for (int k = 0; k < d; ++k) m.t[k] = static_cast<double>(cell[static_cast<std::size_t>(k)]) / b;
        maps.push_back(m);
    }
    OscSet U;
    U.kind = OscSet::Kind::Box;
    U.lo = Vec::Zero(d);
    U.hi = Vec::Ones(d);
    return SimilarityIFS(d, std::move(maps), U);
}

SimilarityIFS sierpinski_ifs() {
    std::vector<SimilarityMap> maps;
    const double h = std::sqrt(3.0) / 2.0;
    const double tx[3] = {0.0, 0.5, 0.25};
    const double ty[3] = {0.0, 0.0, h / 2.0};
    for (int i = 0; i < 3; ++i) {
        SimilarityMap m = SimilarityMap::identity(2);
        m.r = 0.5;
        m.t << tx[i], ty[i];
        maps.push_back(m);
    }
    return SimilarityIFS(2, std::move(maps));
}

std::vector<int> percolation_cell(Letter l, int b, int d) {
    std::vector<int> c(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        c[static_cast<std::size_t>(k)] = static_cast<int>(l % static_cast<Letter>(b));
        l /= static_cast<Letter>(b);
    }
    return c;
}

SimilarityMap word_map(const SimilarityIFS& ifs, const Word& w) {
    SimilarityMap m = SimilarityMap::identity(ifs.dim());
    for (Letter l : w) {
        require(l < ifs.size(), "letter out of range");
        m = m.compose(ifs[l]);
    }
    return m;
}

// ---------------------------------------------------------------- clouds

Vec PointCloud::vec(std::size_t i) const {
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = coords[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
    return v;
}

void PointCloud::push(const Vec& p) {
    for (int k = 0; k < d; ++k) coords.push_back(p[k]);
}

PointCloud render(const SimilarityIFS& ifs, const FiniteTree& tree) {
    require(tree.alphabet_size() == ifs.size(), "tree alphabet and IFS size differ");
    PointCloud cloud;
    cloud.d = ifs.dim();
    const Vec& c = ifs.ball_center();
    double rmax_leaf = 0.0;
    std::vector<SimilarityMap> stack{SimilarityMap::identity(ifs.dim())};
    Word w;
    auto dfs = [&](auto&& self) -> void {
        if (w.size() == tree.depth()) {
            cloud.push(stack.back().apply(c));
            rmax_leaf = std::max(rmax_leaf, stack.back().r);
            return;
        }
        for (Letter l : tree.children(w)) {
            stack.push_back(stack.back().compose(ifs[l]));
            w.push_back(l);
            self(self);
            w.pop_back();
            stack.pop_back();
        }
    };
    dfs(dfs);
    cloud.extinct = cloud.size() == 0;
    double rmax = ifs.weights().r_max();
    cloud.eps = ifs.diameter_bound() * (cloud.extinct ? std::pow(rmax, static_cast<double>(tree.depth())) : rmax_leaf);
    return cloud;
}

PointCloud render(const SimilarityIFS& ifs, const StarTree& tree, const Word& root) {
    PointCloud cloud;
    cloud.d = ifs.dim();
    const Vec& c = ifs.ball_center();
    const std::size_t H = tree.max_height();
    double rmax_leaf = 0.0;
    Word w;
    auto dfs = [&](auto&& self, const SimilarityMap& m) -> void {
        if (tree.height(w) == H) {
            cloud.push(m.apply(c));
            rmax_leaf = std::max(rmax_leaf, m.r);
            return;
        }
        for (const Word& s : tree.children(w)) {
            SimilarityMap child = m.compose(word_map(ifs, s));
            w.insert(w.end(), s.begin(), s.end());
            self(self, child);
            w.resize(w.size() - s.size());
        }
    };
    dfs(dfs, word_map(ifs, root));
    cloud.extinct = cloud.size() == 0;
    cloud.eps = ifs.diameter_bound() * rmax_leaf;
    return cloud;
}

PointCloud render_full(const SimilarityIFS& ifs, std::size_t depth) {
    PointCloud cloud;
    cloud.d = ifs.dim();
    const Vec& c = ifs.ball_center();
    double rmax_leaf = 0.0;
    auto dfs = [&](auto&& self, const SimilarityMap& m, std::size_t level) -> void {
        if (level == depth) {
            cloud.push(m.apply(c));
            rmax_leaf = std::max(rmax_leaf, m.r);
            return;
        }
        for (std::size_t l = 0; l < ifs.size(); ++l) self(self, m.compose(ifs[l]), level + 1);
    };
    dfs(dfs, SimilarityMap::identity(ifs.dim()), 0);
    cloud.eps = ifs.diameter_bound() * rmax_leaf;
    return cloud;
}

PointCloud render_words(const SimilarityIFS& ifs, const std::vector<Word>& words, const Word& root) {
    PointCloud cloud;
    cloud.d = ifs.dim();
    SimilarityMap base = word_map(ifs, root);
    double rmax_leaf = 0.0;
    for (const Word& w : words) {
        SimilarityMap m = base.compose(word_map(ifs, w));
        cloud.push(m.apply(ifs.ball_center()));
        rmax_leaf = std::max(rmax_leaf, m.r);
    }
    cloud.extinct = words.empty();
    cloud.eps = ifs.diameter_bound() * rmax_leaf;
    return cloud;
}

// ---------------------------------------------------------------- Moran

double moran_exponent(const OffspringDistribution& offspring, const WeightedAlphabet& weights, double tol) {
    require(offspring.alphabet_size() == weights.size(), "offspring and weights alphabet differ");
    require(offspring.mean() > 1.0, "Moran exponent needs a supercritical offspring law (m > 1)");
    auto F = [&](double delta) {
        double v = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i)
            v += offspring.marginal(static_cast<Letter>(i)) * std::pow(weights[i], delta);
        return v;
    };
    double lo = 0.0, hi = 1.0;
    while (F(hi) > 1.0) hi *= 2.0;
    for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (F(mid) > 1.0 ? lo : hi) = mid;
        if (std::fabs(F(mid) - 1.0) <= tol * 1e-3 && hi - lo < 1e-15) break;
    }
    double delta = 0.5 * (lo + hi);
    require(std::fabs(F(delta) - 1.0) <= std::max(tol, 1e-15), "Moran bisection did not reach the tolerance");
    return delta;
}

// ---------------------------------------------------------------- width

namespace {

using P2 = std::array<double, 2>;

double cross(const P2& o, const P2& a, const P2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

std::vector<P2> convex_hull_2d(std::vector<P2> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<P2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Half projection range along u.
double half_range(const double* coords, std::size_t n, int d, const Vec& u, double* mid = nullptr) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += u[k] * coords[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (mid) *mid = 0.5 * (lo + hi);
    return 0.5 * (hi - lo);
}

WidthResult width_2d(const double* coords, std::size_t n) {
    std::vector<P2> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {coords[2 * i], coords[2 * i + 1]};
    auto hull = convex_hull_2d(std::move(pts));
    WidthResult res;
    res.witness.u = Vec::Zero(2);
    res.witness.u[0] = 1.0;
    if (hull.size() < 3) {
        // Collinear or a single point: the line through the points has distance 0.
        if (hull.size() == 2) {
            double dx = hull[1][0] - hull[0][0], dy = hull[1][1] - hull[0][1];
            double len = std::hypot(dx, dy);
            res.witness.u << -dy / len, dx / len;
        }
        res.witness.b = hull.empty() ? 0.0 : res.witness.u[0] * hull[0][0] + res.witness.u[1] * hull[0][1];
        res.w = 0.0;
        return res;
    }
    // Rotating calipers: for every hull edge the farthest vertex gives the strip width.
    const std::size_t h = hull.size();
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_edge = 0;
    std::size_t j = 1;
    for (std::size_t i = 0; i < h; ++i) {
        const P2& a = hull[i];
        const P2& b = hull[(i + 1) % h];
        double len = std::hypot(b[0] - a[0], b[1] - a[1]);
        while (std::fabs(cross(a, b, hull[(j + 1) % h])) > std::fabs(cross(a, b, hull[j]))) j = (j + 1) % h;
        double dist = std::fabs(cross(a, b, hull[j])) / len;
        if (dist < best) {
            best = dist;
            best_edge = i;
        }
    }
    const P2& a = hull[best_edge];
    const P2& b = hull[(best_edge + 1) % h];
    double dx = b[0] - a[0], dy = b[1] - a[1];
    double len = std::hypot(dx, dy);
    res.witness.u << -dy / len, dx / len;
    double mid = 0.0;
    res.w = half_range(coords, n, 2, res.witness.u, &mid);
    res.witness.b = mid;
    return res;
}

std::vector<Vec> sphere_directions(int d, std::size_t count) {
    std::vector<Vec> dirs;
    if (d == 3) {
        // Fibonacci points on the upper hemisphere (u and -u give the same objective).
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < count; ++i) {
            double z = 1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(count);
            double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
            double phi = golden * static_cast<double>(i);
            Vec u(3);
            u << rr * std::cos(phi), rr * std::sin(phi), z;
            dirs.push_back(u);
        }
        return dirs;
    }
    Stream rng(0x5eed0d1cULL + static_cast<std::uint64_t>(d));
    for (std::size_t i = 0; i < count; ++i) {
        Vec u(d);
        for (int k = 0; k < d; ++k) {
            double u1 = std::max(rng.uniform(), 1e-300), u2 = rng.uniform();
            u[k] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        }
        dirs.push_back(u.normalized());
    }
    return dirs;
}

// Golden-section coordinate descent on the unit sphere for a min objective.
template <class F>
Vec refine_direction(const F& f, Vec u, double step, double stop, double& value) {
    const int d = static_cast<int>(u.size());
    value = f(u);
    int passes = 0;
    while (step > stop) {
        bool improved = false;
        for (int k = 0; k < d; ++k) {
            auto along = [&](double t) {
                Vec v = u;
                v[k] += t;
                return v.normalized();
            };
            double a = -step, b = step;
            const double g = (std::sqrt(5.0) - 1.0) / 2.0;
            double x1 = b - g * (b - a), x2 = a + g * (b - a);
            double f1 = f(along(x1)), f2 = f(along(x2));
            for (int it = 0; it < 40; ++it) {
                if (f1 < f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = f(along(x1));
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = f(along(x2));
                }
            }
            double t = 0.5 * (a + b);
            double ft = f(along(t));
            if (ft < value) {
                value = ft;
                u = along(t);
                improved = true;
            }
        }
        if (!improved || ++passes >= 50) {
            step *= 0.5;
            passes = 0;
        }
    }
    return u;
}

// Exact 3D width for small clouds. The optimal normal is a hull facet normal or the
// cross product of two hull edges, and both appear among point triples and pairs.
WidthResult width_3d_small(const double* coords, std::size_t n) {
    auto p = [&](std::size_t i) { return Eigen::Vector3d(coords[3 * i], coords[3 * i + 1], coords[3 * i + 2]); };
    WidthResult best;
    best.w = std::numeric_limits<double>::infinity();
    best.witness.u = Vec::Unit(3, 0);
    auto consider = [&](const Eigen::Vector3d& c) {
        const double len = c.norm();
        if (!(len > 1e-12)) return;
        Vec u = c / len;
        const double w = half_range(coords, n, 3, u);
        if (w < best.w) {
            best.w = w;
            best.witness.u = u;
        }
    };
    std::vector<Eigen::Vector3d> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) edges.push_back(p(j) - p(i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) consider((p(j) - p(i)).cross(p(k) - p(i)));
    for (std::size_t a = 0; a < edges.size(); ++a)
        for (std::size_t b = a + 1; b < edges.size(); ++b) consider(edges[a].cross(edges[b]));
    if (!std::isfinite(best.w)) {
        // Collinear or coincident points: any normal to the line works.
        Eigen::Vector3d dir = Eigen::Vector3d::UnitX();
        for (const auto& e : edges)
            if (e.norm() > 1e-12) {
                dir = e.normalized();
                break;
            }
        Eigen::Vector3d other = std::abs(dir.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
        consider(dir.cross(other));
    }
    double mid = 0.0;
    best.w = half_range(coords, n, 3, best.witness.u, &mid);
    best.witness.b = mid;
    return best;
}

}  // namespace

PointCloud hull_vertices(const PointCloud& cloud) {
    if (cloud.d != 2 || cloud.size() < 3) return cloud;
    std::vector<P2> pts(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) pts[i] = {cloud.point(i)[0], cloud.point(i)[1]};
    PointCloud out;
    out.d = 2;
    out.eps = cloud.eps;
    out.extinct = cloud.extinct;
    for (const auto& p : convex_hull_2d(std::move(pts))) {
        out.coords.push_back(p[0]);
        out.coords.push_back(p[1]);
    }
    return out;
}

WidthResult width(const double* coords, std::size_t n, int d) {
    require(n >= 1, "width needs at least one point");
    if (d == 1) {
        WidthResult r;
        r.witness.u = Vec::Ones(1);
        double mid = 0.0;
        r.w = half_range(coords, n, 1, r.witness.u, &mid);
        r.witness.b = mid;
        return r;
    }
    if (d == 2) return width_2d(coords, n);
    if (d == 3 && n <= 48) return width_3d_small(coords, n);
    auto f = [&](const Vec& u) { return half_range(coords, n, d, u); };
    auto dirs = sphere_directions(d, 2000);
    std::vector<std::pair<double, std::size_t>> vals;
    for (std::size_t i = 0; i < dirs.size(); ++i) vals.emplace_back(f(dirs[i]), i);
    std::sort(vals.begin(), vals.end());
    WidthResult best;
    best.w = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < std::min<std::size_t>(8, vals.size()); ++s) {
        double v = 0.0;
        Vec u = refine_direction(f, dirs[vals[s].second], 0.05, 1e-10, v);
        if (v < best.w) {
            best.w = v;
            best.witness.u = u;
        }
    }
    double mid = 0.0;
    best.w = half_range(coords, n, d, best.witness.u, &mid);
    best.witness.b = mid;
    best.tolerance = 1e-10;
    return best;
}

WidthResult width(const PointCloud& cloud) { return width(cloud.coords.data(), cloud.size(), cloud.d); }

WidthResult width_bruteforce_2d(const PointCloud& cloud, std::size_t directions) {
    require(cloud.d == 2, "brute-force width is planar only");
    WidthResult best;
    best.w = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < directions; ++i) {
        double th = M_PI * static_cast<double>(i) / static_cast<double>(directions);
        Vec u(2);
        u << std::cos(th), std::sin(th);
        double mid = 0.0;
        double v = half_range(cloud.coords.data(), cloud.size(), 2, u, &mid);
        if (v < best.w) {
            best.w = v;
            best.witness.u = u;
            best.witness.b = mid;
        }
    }
    best.tolerance = M_PI / static_cast<double>(directions);
    return best;
}

// ---------------------------------------------------------------- spatial index

GridIndex::GridIndex(const PointCloud& cloud, double cell) : cloud_(&cloud), cell_(cell) {
    require(cell > 0.0, "grid cell must be positive");
    const int d = cloud.d;
    std::vector<std::pair<std::uint64_t, std::uint32_t>> entries(cloud.size());
    std::vector<long long> c(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < d; ++k) c[static_cast<std::size_t>(k)] = static_cast<long long>(std::floor(cloud.point(i)[k] / cell));
        entries[i] = {key(c.data()), static_cast<std::uint32_t>(i)};
    }
    std::sort(entries.begin(), entries.end());
    order_.resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        order_[i] = entries[i].second;
        if (i == 0 || entries[i].first != entries[i - 1].first) {
            keys_.push_back(entries[i].first);
            starts_.push_back(static_cast<std::uint32_t>(i));
        }
    }
    starts_.push_back(static_cast<std::uint32_t>(entries.size()));
}

std::uint64_t GridIndex::key(const long long* c) const {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (int k = 0; k < cloud_->d; ++k) h = mix64(h ^ static_cast<std::uint64_t>(c[k]));
    return h;
}

void GridIndex::query(const double* x, double r, std::vector<std::uint32_t>& out) const {
    out.clear();
    const int d = cloud_->d;
    const long long reach = static_cast<long long>(std::ceil(r / cell_));
    std::vector<long long> base(static_cast<std::size_t>(d)), c(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) base[static_cast<std::size_t>(k)] = static_cast<long long>(std::floor(x[k] / cell_));
    std::vector<std::uint64_t> cells;
    std::vector<long long> off(static_cast<std::size_t>(d), -reach);
    while (true) {
        for (int k = 0; k < d; ++k) c[static_cast<std::size_t>(k)] = base[static_cast<std::size_t>(k)] + off[static_cast<std::size_t>(k)];
        cells.push_back(key(c.data()));
        int k = 0;
        while (k < d && ++off[static_cast<std::size_t>(k)] > reach) off[static_cast<std::size_t>(k++)] = -reach;
        if (k == d) break;
    }
    // Distinct cells may share a hash; visiting each key once avoids duplicates.
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    const double r2 = r * r;
    for (std::uint64_t kk : cells) {
        auto it = std::lower_bound(keys_.begin(), keys_.end(), kk);
        if (it == keys_.end() || *it != kk) continue;
        std::size_t b = static_cast<std::size_t>(it - keys_.begin());
        for (std::uint32_t pos = starts_[b]; pos < starts_[b + 1]; ++pos) {
            std::uint32_t idx = order_[pos];
            const double* p = cloud_->point(idx);
            double s = 0.0;
            for (int q = 0; q < d; ++q) s += (p[q] - x[q]) * (p[q] - x[q]);
            if (s <= r2) out.push_back(idx);
        }
    }
    std::sort(out.begin(), out.end());
}

// ---------------------------------------------------------------- empirical checks

std::vector<double> geometric_ladder(double lo, double hi, std::size_t count) {
    require(lo > 0.0 && hi >= lo && count >= 1, "invalid scale ladder");
    std::vector<double> out;
    if (count == 1) return {lo};
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1)));
    return out;
}

namespace {
std::vector<double> gather(const PointCloud& cloud, const std::vector<std::uint32_t>& idx) {
    std::vector<double> pts;
    pts.reserve(idx.size() * static_cast<std::size_t>(cloud.d));
    for (std::uint32_t i : idx) pts.insert(pts.end(), cloud.point(i), cloud.point(i) + cloud.d);
    return pts;
}
}  // namespace

DiffuseCheckReport empirical_diffuse_check(const PointCloud& cloud, double beta, const std::vector<double>& scales,
                                           std::size_t samples_per_scale, std::uint64_t seed, Exec exec) {
    require(beta > 0.0, "beta must be positive");
    require(cloud.size() > 0, "empty cloud");
    DiffuseCheckReport rep;
    rep.worst_ratio = std::numeric_limits<double>::infinity();
    const double rad = 0.5 * cloud.eps;  // representative-to-piece distance bound
    struct Ball {
        bool tested = false;
        double ratio = 0.0;
        bool fail = false;
        std::size_t center = 0;
        Hyperplane plane;
    };
    for (std::size_t si = 0; si < scales.size(); ++si) {
        const double xi = scales[si];
        if (xi < 4.0 * cloud.eps) {
            rep.skipped += samples_per_scale;
            continue;
        }
        rep.scales.push_back(xi);
        const double inner = xi - 2.0 * rad;
        GridIndex index(cloud, inner);
        auto balls = map_indexed<Ball>(
            samples_per_scale,
            [&](std::size_t j) {
                Ball b;
                Stream rng(derive_seed(seed, si * 1'000'003ULL + j));
                b.center = static_cast<std::size_t>(rng.below(cloud.size()));
                std::vector<std::uint32_t> idx;
                index.query(cloud.point(b.center), inner, idx);
                if (idx.empty()) return b;
                auto pts = gather(cloud, idx);
                WidthResult wr = width(pts.data(), idx.size(), cloud.d);
                b.tested = true;
                b.ratio = (wr.w - rad) / xi;
                b.fail = !(wr.w > beta * xi + rad);
                b.plane = wr.witness;
                return b;
            },
            exec);
        for (const auto& b : balls) {
            if (!b.tested) {
                ++rep.skipped;
                continue;
            }
            ++rep.tested;
            if (b.fail) ++rep.failures;
            if (b.ratio < rep.worst_ratio) {
                rep.worst_ratio = b.ratio;
                rep.witness_center = cloud.vec(b.center);
                rep.witness_xi = xi;
                rep.witness_plane = b.plane;
            }
        }
    }
    rep.pass = rep.failures == 0 && rep.tested > 0;
    return rep;
}

FlatBallSearch search_flat_ball(const PointCloud& cloud, double beta, const std::vector<double>& scales,
                                std::size_t balls, std::uint64_t seed, Exec exec) {
    require(cloud.size() > 0 && !scales.empty(), "flat-ball search needs points and scales");
    FlatBallSearch out;
    out.best_ratio = std::numeric_limits<double>::infinity();
    struct Hit {
        double ratio = 0.0;
        std::size_t center = 0, count = 0, scale = 0;
        Hyperplane plane;
    };
    std::vector<GridIndex> indices;
    for (double xi : scales) indices.emplace_back(cloud, xi);
    auto hits = map_indexed<Hit>(
        balls,
        [&](std::size_t j) {
            Stream rng(derive_seed(seed, j));
            Hit h;
            h.scale = static_cast<std::size_t>(rng.below(scales.size()));
            h.center = static_cast<std::size_t>(rng.below(cloud.size()));
            std::vector<std::uint32_t> idx;
            indices[h.scale].query(cloud.point(h.center), scales[h.scale], idx);
            auto pts = gather(cloud, idx);
            WidthResult wr = width(pts.data(), idx.size(), cloud.d);
            h.ratio = wr.w / scales[h.scale];
            h.count = idx.size();
            h.plane = wr.witness;
            return h;
        },
        exec);
    out.balls = balls;
    for (const auto& h : hits) {
        if (h.ratio < out.best_ratio) {
            out.best_ratio = h.ratio;
            out.center = cloud.vec(h.center);
            out.xi = scales[h.scale];
            out.points_in_ball = h.count;
            out.plane = h.plane;
        }
    }
    out.found = out.best_ratio <= beta;
    return out;
}

std::size_t osc_overlap_count(const SimilarityIFS& ifs, double rho, std::size_t samples, std::uint64_t seed) {
    if (!ifs.osc()) fail(ErrorKind::Capability, "overlap count needs an open set U");
    const auto weights = ifs.weights();
    const OscSet& U = *ifs.osc();
    // Sample centres near the attractor: images of the ball centre under random words.
    const std::size_t depth = section_max_length(weights, rho) + 2;
    std::size_t best = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        Stream rng(derive_seed(seed, s));
        Word w;
        for (std::size_t k = 0; k < depth; ++k) w.push_back(static_cast<Letter>(rng.below(ifs.size())));
        Vec x = word_map(ifs, w).apply(ifs.ball_center());
        std::size_t count = 0;
        Word cur;
        auto dfs = [&](auto&& self, const SimilarityMap& m) -> void {
            // φ_w(U) is open, B_ρ(x) is open: they meet iff dist(x, closure) < ρ.
            if (m.r * U.distance(m.inverse_apply(x)) >= rho) return;
            if (!cur.empty() && in_section(weights, rho, cur)) {
                ++count;
                return;
            }
            for (std::size_t l = 0; l < ifs.size(); ++l) {
                cur.push_back(static_cast<Letter>(l));
                self(self, m.compose(ifs[l]));
                cur.pop_back();
            }
        };
        if (weight_leq(1.0, rho))
            count = 1;
        else
            dfs(dfs, SimilarityMap::identity(ifs.dim()));
        best = std::max(best, count);
    }
    return best;
}

std::size_t box_count(const PointCloud& cloud, double delta) {
    const int d = cloud.d;
    std::vector<std::uint64_t> keys(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        std::uint64_t h = 0x13198a2e03707344ULL;
        for (int k = 0; k < d; ++k)
            h = mix64(h ^ static_cast<std::uint64_t>(static_cast<long long>(std::floor(cloud.point(i)[k] / delta))));
        keys[i] = h;
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

BoxDimResult box_dimension(const PointCloud& cloud, std::size_t scale_count, Exec exec) {
    require(cloud.size() >= 2, "box dimension needs at least two points");
    require(scale_count >= 3, "box dimension needs at least three scales");
    const int d = cloud.d;
    Vec lo = cloud.vec(0), hi = cloud.vec(0);
    for (std::size_t i = 1; i < cloud.size(); ++i) {
        lo = lo.cwiseMin(cloud.vec(i));
        hi = hi.cwiseMax(cloud.vec(i));
    }
    const double diam = (hi - lo).norm();
    const double s_lo = cloud.eps > 0.0 ? 4.0 * cloud.eps : diam * 1e-3;
    const double s_hi = diam / 4.0;
    require(s_hi > 2.0 * s_lo, "fewer than 3 usable scales between 4*eps and diameter/4");
    (void)d;
    BoxDimResult out;
    out.scales = geometric_ladder(s_lo, s_hi, scale_count);
    out.counts = map_indexed<std::size_t>(
        out.scales.size(), [&](std::size_t i) { return box_count(cloud, out.scales[i]); }, exec);
    // Least-squares slope of log N against log(1/δ).
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(out.scales.size());
    for (std::size_t i = 0; i < out.scales.size(); ++i) {
        double x = std::log(1.0 / out.scales[i]);
        double y = std::log(static_cast<double>(out.counts[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    out.estimate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.intercept = (sy - out.estimate * sx) / n;
    double ssr = 0.0;
    for (std::size_t i = 0; i < out.scales.size(); ++i) {
        double e = std::log(static_cast<double>(out.counts[i])) - out.intercept - out.estimate * std::log(1.0 / out.scales[i]);
        ssr += e * e;
    }
    const double sxx_c = sxx - sx * sx / n;
    out.std_error = n > 2 ? std::sqrt(ssr / (n - 2.0) / sxx_c) : 0.0;
    return out;
}

double AhlforsResult::spread_prefix(std::size_t count) const {
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < count && i < radii.size(); ++i) {
        lo = std::min(lo, lower_min[i]);
        hi = std::max(hi, upper_max[i]);
    }
    return lo > 0.0 ? hi / lo : INFINITY;
}

AhlforsResult ahlfors_ratio_check(const PointCloud& cloud, const std::vector<double>& masses, double alpha,
                                  std::size_t samples, std::uint64_t seed, double r_lo, double r_hi,
                                  std::size_t radius_count, Exec exec) {
    require(masses.size() == cloud.size(), "one mass per cloud point required");
    require(cloud.size() > 0, "empty cloud");
    AhlforsResult out;
    out.samples = samples;
    out.radii = geometric_ladder(r_lo, r_hi, radius_count);
    const double rad = 0.5 * cloud.eps;
    require(r_lo > 2.0 * rad, "smallest radius must exceed the cloud resolution");
    std::vector<GridIndex> indices;
    for (double r : out.radii) indices.emplace_back(cloud, r + 2.0 * rad);
    struct Sample {
        std::size_t ri = 0;
        double lower = 0.0, upper = 0.0;
    };
    auto res = map_indexed<Sample>(
        samples,
        [&](std::size_t j) {
            Stream rng(derive_seed(seed, j));
            Sample s;
            s.ri = j % out.radii.size();
            std::size_t c = static_cast<std::size_t>(rng.below(cloud.size()));
            const double r = out.radii[s.ri];
            std::vector<std::uint32_t> idx;
            indices[s.ri].query(cloud.point(c), r + 2.0 * rad, idx);
            const double inner2 = (r - 2.0 * rad) * (r - 2.0 * rad);
            double lower = 0.0, upper = 0.0;
            for (std::uint32_t i : idx) {
                upper += masses[i];
                double dd = 0.0;
                for (int k = 0; k < cloud.d; ++k) {
                    double e = cloud.point(i)[k] - cloud.point(c)[k];
                    dd += e * e;
                }
                if (dd <= inner2) lower += masses[i];
            }
            s.lower = lower / std::pow(r, alpha);
            s.upper = upper / std::pow(r, alpha);
            return s;
        },
        exec);
    out.lower_min.assign(out.radii.size(), INFINITY);
    out.upper_max.assign(out.radii.size(), 0.0);
    for (const auto& s : res) {
        out.lower_min[s.ri] = std::min(out.lower_min[s.ri], s.lower);
        out.upper_max[s.ri] = std::max(out.upper_max[s.ri], s.upper);
    }
    out.c1_hat = *std::min_element(out.lower_min.begin(), out.lower_min.end());
    out.c2_hat = *std::max_element(out.upper_max.begin(), out.upper_max.end());
    return out;
}

PointCloud miniset(const PointCloud& cloud, const Vec& center, double radius) {
    require(radius > 0.0, "miniset radius must be positive");
    require(center.size() == cloud.d, "centre dimension mismatch");
    PointCloud out;
    out.d = cloud.d;
    out.eps = cloud.eps / radius;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Vec p = cloud.vec(i);
        if ((p - center).norm() <= radius) out.push((p - center) / radius);
    }
    require(out.size() > 0, "ball contains no cloud points");
    return out;
}

// ---------------------------------------------------------------- output

void write_csv(const PointCloud& cloud, std::ostream& out) {
    static const char* names[] = {"x", "y", "z", "w", "x4", "x5", "x6", "x7"};
    for (int k = 0; k < cloud.d; ++k) out << (k ? "," : "") << names[k];
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < cloud.d; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", cloud.point(i)[k]);
            out << (k ? "," : "") << buf;
        }
        out << "\n";
    }
}

void write_pgm(const PointCloud& cloud, const RasterSpec& spec, std::ostream& out) {
    require(cloud.d >= 2, "rasters need at least two coordinates");
    require(spec.width > 0 && spec.height > 0, "raster size must be positive");
    std::vector<unsigned char> pix(static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height), 255);
    const double sx = spec.width / (spec.hi_x - spec.lo_x);
    const double sy = spec.height / (spec.hi_y - spec.lo_y);
    auto clampi = [](long v, long hi) { return std::min(std::max(v, 0L), hi - 1); };
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double x = cloud.point(i)[0], y = cloud.point(i)[1];
        if (x < spec.lo_x - spec.fill || x > spec.hi_x + spec.fill || y < spec.lo_y - spec.fill ||
            y > spec.hi_y + spec.fill)
            continue;
        long x0 = clampi(static_cast<long>(std::floor((x - spec.fill - spec.lo_x) * sx)), spec.width);
        long x1 = clampi(static_cast<long>(std::ceil((x + spec.fill - spec.lo_x) * sx)) - 1, spec.width);
        long y0 = clampi(static_cast<long>(std::floor((y - spec.fill - spec.lo_y) * sy)), spec.height);
        long y1 = clampi(static_cast<long>(std::ceil((y + spec.fill - spec.lo_y) * sy)) - 1, spec.height);
        if (x1 < x0) x1 = x0;
        if (y1 < y0) y1 = y0;
        for (long py = y0; py <= y1; ++py)
            for (long px = x0; px <= x1; ++px)
                pix[static_cast<std::size_t>(spec.height - 1 - py) * static_cast<std::size_t>(spec.width) +
                    static_cast<std::size_t>(px)] = 0;
    }
    out << "P5\n" << spec.width << " " << spec.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
}

}  // namespace gwf
