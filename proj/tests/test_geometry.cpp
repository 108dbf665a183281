#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gwfract/error.hpp"
#include "gwfract/geometry.hpp"

using namespace gwf;

namespace {

PointCloud cloud_of(int d, const std::vector<std::vector<double>>& pts, double eps = 0.0) {
    PointCloud c;
    c.d = d;
    c.eps = eps;
    for (const auto& p : pts) c.coords.insert(c.coords.end(), p.begin(), p.end());
    return c;
}

PointCloud random_cloud(int d, std::size_t n, std::uint64_t seed) {
    Stream rng(seed);
    PointCloud c;
    c.d = d;
    for (std::size_t i = 0; i < n * static_cast<std::size_t>(d); ++i) c.coords.push_back(rng.uniform());
    return c;
}

// Half the minimal slab width, trying every pair of points as an edge direction (d = 2).
double width_by_edges(const PointCloud& c) {
    double best = INFINITY;
    for (std::size_t i = 0; i < c.size(); ++i)
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            double ex = c.point(j)[0] - c.point(i)[0], ey = c.point(j)[1] - c.point(i)[1];
            double len = std::hypot(ex, ey);
            if (len == 0) continue;
            double nx = -ey / len, ny = ex / len, lo = INFINITY, hi = -INFINITY;
            for (std::size_t k = 0; k < c.size(); ++k) {
                double v = nx * c.point(k)[0] + ny * c.point(k)[1];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            best = std::min(best, 0.5 * (hi - lo));
        }
    return best;
}

}  // namespace

TEST_CASE("similarity maps") {
    auto ifs = sierpinski_ifs();
    Vec x(2);
    x << 0.3, 0.1;
    auto m = word_map(ifs, {2, 0, 1});
    Vec seq = ifs[2].apply(ifs[0].apply(ifs[1].apply(x)));
    CHECK((m.apply(x) - seq).norm() < 1e-14);
    CHECK(m.r == doctest::Approx(0.125));
    CHECK((m.inverse_apply(m.apply(x)) - x).norm() < 1e-12);
    Vec f = ifs[1].fixed_point();
    CHECK((ifs[1].apply(f) - f).norm() < 1e-14);
}

TEST_CASE("IFS validation, open set condition and the bounding ball") {
    CHECK(percolation_ifs(3, 2).check_osc());
    CHECK(percolation_ifs(2, 3).check_osc());
    // The gasket pieces touch at corners, so no ball or box separates them.
    CHECK_FALSE(sierpinski_ifs().check_osc());
    SimilarityMap a = SimilarityMap::identity(1), b = SimilarityMap::identity(1);
    a.r = b.r = 0.6;
    b.t[0] = 0.4;
    OscSet box;
    box.lo = Vec::Zero(1);
    box.hi = Vec::Ones(1);
    CHECK_FALSE(SimilarityIFS(1, {a, b}, box).check_osc());
    SimilarityMap bad = SimilarityMap::identity(2);
    CHECK_THROWS_AS(SimilarityIFS(2, {bad}), Error);

    for (const auto& ifs : {sierpinski_ifs(), percolation_ifs(3, 2)}) {
        auto full = render_full(ifs, 5);
        for (std::size_t i = 0; i < full.size(); ++i)
            CHECK((full.vec(i) - ifs.ball_center()).norm() <= ifs.ball_radius() + 1e-12);
        for (const auto& m : ifs.maps())
            CHECK((m.apply(ifs.ball_center()) - ifs.ball_center()).norm() + m.r * ifs.ball_radius() <=
                  ifs.ball_radius() + 1e-12);
    }
    // Cells of side 1/81; a radius-1/81 ball about a cell centre reaches its 3x3 neighbourhood.
    CHECK(osc_overlap_count(percolation_ifs(3, 2), 1.0 / 81.0, 2000, 1) == 9);
}

TEST_CASE("percolation grid layout") {
    auto ifs = percolation_ifs(3, 2);
    CHECK(ifs.size() == 9);
    for (Letter l = 0; l < 9; ++l) {
        auto cell = percolation_cell(l, 3, 2);
        CHECK(cell[0] == static_cast<int>(l % 3));
        CHECK(cell[1] == static_cast<int>(l / 3));
        Vec c = ifs[l].apply(Vec::Constant(2, 0.5));
        CHECK(c[0] == doctest::Approx((cell[0] + 0.5) / 3.0));
        CHECK(c[1] == doctest::Approx((cell[1] + 0.5) / 3.0));
    }
}

TEST_CASE("rendering") {
    auto ifs = percolation_ifs(2, 2);
    auto full = render_full(ifs, 3);
    CHECK(full.size() == 64);
    CHECK(full.eps == doctest::Approx(ifs.diameter_bound() / 8.0));
    FiniteTree t(4, 2);
    t.insert({0, 3});
    t.insert({2, 1});
    auto c = render(ifs, t);
    CHECK(c.size() == 2);
    auto w = render_words(ifs, {{0, 3}, {2, 1}});
    CHECK(w.coords == c.coords);
    StarTree st(4);
    st.add_child({}, {0, 3});
    st.add_child({}, {2, 1});
    CHECK(render(ifs, st).coords == c.coords);
    std::ostringstream os;
    write_pgm(c, RasterSpec{16, 8}, os);
    CHECK(os.str().rfind("P5\n16 8\n255\n", 0) == 0);
    CHECK(os.str().size() == std::string("P5\n16 8\n255\n").size() + 128);
}

TEST_CASE("Moran exponent") {
    auto perc = percolation_ifs(3, 2);
    for (double p : {0.2, 0.6, 1.0}) {
        auto w = OffspringDistribution::binomial(9, p);
        CHECK(moran_exponent(w, perc.weights()) == doctest::Approx(std::log(9 * p) / std::log(3.0)).epsilon(1e-12));
    }
    auto bern = OffspringDistribution::bernoulli({0.9, 0.5, 0.7});
    WeightedAlphabet wa({0.5, 0.3, 0.2});
    double d = moran_exponent(bern, wa);
    CHECK(0.9 * std::pow(0.5, d) + 0.5 * std::pow(0.3, d) + 0.7 * std::pow(0.2, d) == doctest::Approx(1.0));
    CHECK_THROWS_AS(moran_exponent(OffspringDistribution::binomial(9, 0.1), perc.weights()), Error);
}

TEST_CASE("width") {
    auto square = cloud_of(2, {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}});
    CHECK(width(square).w == doctest::Approx(0.5));
    CHECK(hull_vertices(square).size() == 4);
    auto tri = cloud_of(2, {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}});
    CHECK(width(tri).w == doctest::Approx(std::sqrt(3.0) / 4));
    auto line = cloud_of(2, {{0, 0}, {1, 1}, {2, 2}});
    CHECK(width(line).w == doctest::Approx(0.0).epsilon(1e-12));
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto c = random_cloud(2, 30, seed);
        auto r = width(c);
        CHECK(r.w == doctest::Approx(width_by_edges(c)).epsilon(1e-9));
        CHECK(width_bruteforce_2d(c, 4000).w >= r.w - 1e-12);
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t i = 0; i < c.size(); ++i) {
            double v = r.witness.u.dot(c.vec(i));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(0.5 * (hi - lo) == doctest::Approx(r.w));
    }
    std::vector<std::vector<double>> corners;
    for (int m = 0; m < 8; ++m) corners.push_back({double(m & 1), double(m >> 1 & 1), double(m >> 2 & 1)});
    CHECK(width(cloud_of(3, corners)).w == doctest::Approx(0.5).epsilon(1e-6));
    auto flat = cloud_of(3, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
    CHECK(width(flat).w < 1e-9);

    // Large clouds take the search path; a slab [0,1]^2 x [0,0.2] with its corners has width 0.1.
    auto slab = random_cloud(3, 200, 11);
    for (std::size_t i = 0; i < slab.size(); ++i) slab.coords[3 * i + 2] *= 0.2;
    for (auto c : corners) {
        c[2] *= 0.2;
        slab.push(Vec(Eigen::Map<const Vec>(c.data(), 3)));
    }
    CHECK(width(slab).w == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("diffuseness constant against the grid oracle") {
    auto ifs = sierpinski_ifs();
    auto F = render_full(ifs, 5);
    for (auto mode : {DiffuseMode::Hull, DiffuseMode::Cloud}) {
        DiffuseOptions o;
        o.mode = mode;
        o.tol = 1e-4;
        auto c = diffuseness_constant(ifs.maps(), F, o);
        CHECK(c.certified);
        CHECK(c.c_low <= c.c_up + 1e-12);
        CHECK(c.c_up - c.c_low <= 1e-4 + 1e-12);
        double brute = diffuseness_bruteforce_2d(ifs.maps(), F, 720, 400, mode);
        CHECK(c.c_low <= brute + 1e-9);
        CHECK(brute <= c.c_up + 0.01);
        // The three half-size triangles touch pairwise, so one line meets all of them.
        CHECK(c.c_up < 1e-3);
    }
    std::vector<SimilarityMap> level2;
    for (Letter a = 0; a < 3; ++a)
        for (Letter b = 0; b < 3; ++b) level2.push_back(word_map(ifs, {a, b}));
    DiffuseOptions o;
    o.tol = 1e-4;
    auto c2 = diffuseness_constant(level2, F, o);
    double brute2 = diffuseness_bruteforce_2d(level2, F, 720, 400, DiffuseMode::Hull);
    CHECK(c2.c_low > 0.05);
    CHECK(c2.c_low <= brute2 + 1e-9);
    CHECK(brute2 <= c2.c_up + 0.01);
    auto single = diffuseness_constant({ifs[0]}, F);
    CHECK(single.c_up == 0.0);
    // Maps whose images line up along one axis have constant zero.
    SimilarityMap a = SimilarityMap::identity(2), b = a;
    a.r = b.r = 0.4;
    b.t[0] = 0.6;
    auto flat = cloud_of(2, {{0, 0}, {1, 0}});
    auto z = diffuseness_constant({a, b}, flat);
    CHECK(z.c_low <= 1e-9);
}

TEST_CASE("box dimension") {
    auto grid = render_full(percolation_ifs(3, 2), 5);
    auto g = box_dimension(grid, 8);
    CHECK(g.estimate == doctest::Approx(2.0).epsilon(0.05));
    auto tri = render_full(sierpinski_ifs(), 8);
    auto t = box_dimension(tri, 8);
    CHECK(std::abs(t.estimate - std::log(3.0) / std::log(2.0)) < 0.1);
    CHECK(t.std_error >= 0.0);
    CHECK(box_count(grid, 10.0) == 1);
    CHECK(box_dimension(tri, 8, Exec::Serial).counts == t.counts);
}

TEST_CASE("empirical diffuseness and flat-ball search") {
    auto grid = render_full(percolation_ifs(3, 2), 4);
    auto scales = geometric_ladder(0.1, 0.4, 3);
    CHECK(scales.size() == 3);
    CHECK(scales.front() == doctest::Approx(0.1));
    CHECK(scales.back() == doctest::Approx(0.4));
    auto ok = empirical_diffuse_check(grid, 0.1, scales, 100, 1);
    CHECK(ok.pass);
    CHECK(ok.failures == 0);
    CHECK(ok.tested > 0);
    PointCloud line;
    line.d = 2;
    for (int i = 0; i <= 200; ++i) line.push((Vec(2) << i / 200.0, 0.5).finished());
    auto bad = empirical_diffuse_check(line, 0.05, scales, 100, 1);
    CHECK_FALSE(bad.pass);
    auto flat = search_flat_ball(line, 0.01, scales, 200, 2);
    CHECK(flat.found);
    auto none = search_flat_ball(grid, 0.01, scales, 500, 2);
    CHECK_FALSE(none.found);
    CHECK(empirical_diffuse_check(grid, 0.1, scales, 100, 1, Exec::Serial).worst_ratio == ok.worst_ratio);
}

TEST_CASE("grid index matches linear scan") {
    auto c = random_cloud(2, 2000, 4);
    GridIndex idx(c, 0.05);
    Stream rng(8);
    std::vector<std::uint32_t> got;
    for (int q = 0; q < 50; ++q) {
        double x[2] = {rng.uniform(), rng.uniform()};
        double r = 0.01 + 0.1 * rng.uniform();
        idx.query(x, r, got);
        std::sort(got.begin(), got.end());
        std::vector<std::uint32_t> want;
        for (std::uint32_t i = 0; i < c.size(); ++i)
            if (std::hypot(c.point(i)[0] - x[0], c.point(i)[1] - x[1]) <= r) want.push_back(i);
        CHECK(got == want);
    }
}

TEST_CASE("Ahlfors ratios") {
    auto grid = render_full(percolation_ifs(3, 2), 5);
    std::vector<double> mass(grid.size(), 1.0 / grid.size());
    auto r = ahlfors_ratio_check(grid, mass, 2.0, 300, 1, 0.05, 0.3, 6);
    CHECK(r.c1_hat > 0.0);
    CHECK(r.spread() < 50.0);
    auto off = ahlfors_ratio_check(grid, mass, 1.2, 300, 1, 0.05, 0.3, 6);
    CHECK(off.spread() > r.spread());
    CHECK(r.spread_prefix(r.radii.size()) == doctest::Approx(r.spread()));
}

TEST_CASE("miniset and csv") {
    auto grid = render_full(percolation_ifs(3, 2), 2);
    Vec x = Vec::Constant(2, 0.5);
    auto m = miniset(grid, x, 0.4);
    REQUIRE(m.size() > 0);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m.vec(i).norm() <= 1.0 + 1e-12);
    CHECK(m.eps == doctest::Approx(grid.eps / 0.4));
    Vec y(2);
    y << 0.1, -0.2;
    auto nested = miniset(m, y, 0.5);
    auto direct = miniset(grid, x + 0.4 * y, 0.2);
    REQUIRE(nested.size() == direct.size());
    for (std::size_t i = 0; i < nested.size(); ++i) CHECK((nested.vec(i) - direct.vec(i)).norm() < 1e-12);
    std::ostringstream os;
    write_csv(grid, os);
    CHECK(os.str().rfind("x,y\n", 0) == 0);
}
