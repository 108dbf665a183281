#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gwfract/branching.hpp"
#include "gwfract/parallel.hpp"
#include "gwfract/symbolic.hpp"

namespace gwf {

inline constexpr int kMaxDim = 8;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

struct SimilarityMap {
    double r = 1.0;
    Mat O;
    Vec t;

    static SimilarityMap identity(int d);
    int dim() const { return static_cast<int>(t.size()); }
    Vec apply(const Vec& x) const { return r * (O * x) + t; }
    // (*this) ∘ inner
    SimilarityMap compose(const SimilarityMap& inner) const;
    Vec inverse_apply(const Vec& y) const { return O.transpose() * (y - t) / r; }
    Vec fixed_point() const;
};

struct OscSet {
    enum class Kind { Box, Ball };
    Kind kind = Kind::Box;
    Vec lo, hi;      // box
    Vec center;      // ball
    double radius = 0.0;

    double distance(const Vec& x) const;
};

class SimilarityIFS {
public:
    SimilarityIFS() = default;
    SimilarityIFS(int d, std::vector<SimilarityMap> maps, std::optional<OscSet> osc = std::nullopt);

    int dim() const { return d_; }
    std::size_t size() const { return maps_.size(); }
    const SimilarityMap& operator[](std::size_t i) const { return maps_[i]; }
    const std::vector<SimilarityMap>& maps() const { return maps_; }
    const std::optional<OscSet>& osc() const { return osc_; }
    WeightedAlphabet weights() const;

    // Ball B(center, radius) with φ_i(B) ⊆ B for every i, hence containing the attractor.
    const Vec& ball_center() const { return center_; }
    double ball_radius() const { return radius_; }
    // Certified upper bound Δ̂ on diam(K).
    double diameter_bound() const { return 2.0 * radius_; }

    // Checks φ_i(U) ⊆ U and pairwise disjointness of the images (boxes: interval arithmetic).
    bool check_osc() const;

private:
    int d_ = 0;
    std::vector<SimilarityMap> maps_;
    std::optional<OscSet> osc_;
    Vec center_;
    double radius_ = 0.0;
};

SimilarityIFS percolation_ifs(int b, int d);
SimilarityIFS sierpinski_ifs();

// Grid coordinates (i_0,...,i_{d-1}) of a percolation letter, i_0 fastest.
std::vector<int> percolation_cell(Letter l, int b, int d);

SimilarityMap word_map(const SimilarityIFS& ifs, const Word& w);

struct PointCloud {
    int d = 2;
    std::vector<double> coords;  // row-major, size() * d
    double eps = 0.0;            // every represented piece has diameter <= eps and contains points within eps/2 of its representative
    bool extinct = false;

    std::size_t size() const { return d ? coords.size() / static_cast<std::size_t>(d) : 0; }
    const double* point(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(d); }
    Vec vec(std::size_t i) const;
    void push(const Vec& p);
};

// One representative point per deepest-level word (image of the IFS ball centre).
PointCloud render(const SimilarityIFS& ifs, const FiniteTree& tree);
PointCloud render(const SimilarityIFS& ifs, const StarTree& tree, const Word& root = {});
PointCloud render_full(const SimilarityIFS& ifs, std::size_t depth);
PointCloud render_words(const SimilarityIFS& ifs, const std::vector<Word>& words, const Word& root = {});

double moran_exponent(const OffspringDistribution& offspring, const WeightedAlphabet& weights, double tol = 1e-13);

struct Hyperplane {
    Vec u;
    double b = 0.0;
    double distance(const Vec& x) const { return std::abs(u.dot(x) - b); }
};

struct WidthResult {
    double w = 0.0;
    Hyperplane witness;
    double tolerance = 0.0;
};

// Vertices of the convex hull (d = 2); other dimensions return the cloud unchanged.
PointCloud hull_vertices(const PointCloud& cloud);

WidthResult width(const double* coords, std::size_t n, int d);
WidthResult width(const PointCloud& cloud);
// Reference evaluation over `directions` uniform angles (d = 2 only).
WidthResult width_bruteforce_2d(const PointCloud& cloud, std::size_t directions);

enum class DiffuseMode {
    Hull,   // images of the convex hull of F (valid upper set for K)
    Cloud,  // images of the point cloud itself, corrected by eps
};

struct DiffuseOptions {
    DiffuseMode mode = DiffuseMode::Hull;
    std::size_t directions = 2000;
    double tol = 1e-6;
    std::size_t max_evaluations = 400000;
    Exec exec = Exec::Parallel;
};

struct DiffuseCertificate {
    double c_low = 0.0;  // certified lower bound on min_L max_i dist(φ_i F, L)
    double c_up = 0.0;   // value attained at the witness hyperplane
    Hyperplane witness;
    double tolerance = 0.0;
    bool certified = true;
    std::string note;
};

DiffuseCertificate diffuseness_constant(const std::vector<SimilarityMap>& maps, const PointCloud& F,
                                        const DiffuseOptions& opts = {});

// Oracle used in tests: max-min objective on a uniform (angle, offset) grid, d = 2.
double diffuseness_bruteforce_2d(const std::vector<SimilarityMap>& maps, const PointCloud& F,
                                 std::size_t angles, std::size_t offsets, DiffuseMode mode);

struct DiffuseCheckReport {
    bool pass = true;
    double worst_ratio = 0.0;    // min over balls of (width - eps/2) / ξ
    std::size_t tested = 0;
    std::size_t skipped = 0;
    std::size_t failures = 0;
    Vec witness_center;
    double witness_xi = 0.0;
    Hyperplane witness_plane;
    std::vector<double> scales;
};

DiffuseCheckReport empirical_diffuse_check(const PointCloud& cloud, double beta, const std::vector<double>& scales,
                                           std::size_t samples_per_scale, std::uint64_t seed,
                                           Exec exec = Exec::Parallel);
std::vector<double> geometric_ladder(double lo, double hi, std::size_t count);

struct FlatBallSearch {
    bool found = false;
    double best_ratio = 0.0;  // min width(cloud ∩ B_ξ(x)) / ξ
    Vec center;
    double xi = 0.0;
    std::size_t points_in_ball = 0;
    std::size_t balls = 0;
    Hyperplane plane;
};

// Searches sampled balls for width(cloud ∩ B_ξ(x)) <= beta·ξ.
FlatBallSearch search_flat_ball(const PointCloud& cloud, double beta, const std::vector<double>& scales,
                                std::size_t balls, std::uint64_t seed, Exec exec = Exec::Parallel);

std::size_t osc_overlap_count(const SimilarityIFS& ifs, double rho, std::size_t samples, std::uint64_t seed);

struct BoxDimResult {
    double estimate = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;  // of the fitted slope
    std::vector<double> scales;
    std::vector<std::size_t> counts;
};

BoxDimResult box_dimension(const PointCloud& cloud, std::size_t scale_count, Exec exec = Exec::Parallel);
std::size_t box_count(const PointCloud& cloud, double delta);

struct AhlforsResult {
    double c1_hat = 0.0;
    double c2_hat = 0.0;
    std::size_t samples = 0;
    std::vector<double> radii;
    std::vector<double> lower_min;  // per radius: min of inner mass / r^α
    std::vector<double> upper_max;  // per radius: max of outer mass / r^α
    double spread() const { return c1_hat > 0.0 ? c2_hat / c1_hat : INFINITY; }
    // Spread restricted to the radii with index < count.
    double spread_prefix(std::size_t count) const;
};

AhlforsResult ahlfors_ratio_check(const PointCloud& cloud, const std::vector<double>& masses, double alpha,
                                  std::size_t samples, std::uint64_t seed, double r_lo, double r_hi,
                                  std::size_t radius_count = 8, Exec exec = Exec::Parallel);

PointCloud miniset(const PointCloud& cloud, const Vec& center, double radius);

void write_csv(const PointCloud& cloud, std::ostream& out);
struct RasterSpec {
    int width = 512;
    int height = 512;
    double lo_x = 0.0, lo_y = 0.0, hi_x = 1.0, hi_y = 1.0;
    double fill = 0.0;  // half-side of the square painted around each point
};
void write_pgm(const PointCloud& cloud, const RasterSpec& spec, std::ostream& out);

// Spatial hash for ball queries.
class GridIndex {
public:
    GridIndex(const PointCloud& cloud, double cell);
    // Indices of points within distance r (closed) of x.
    void query(const double* x, double r, std::vector<std::uint32_t>& out) const;

private:
    std::uint64_t key(const long long* c) const;
    const PointCloud* cloud_;
    double cell_;
    std::vector<std::uint64_t> keys_;        // sorted cell keys
    std::vector<std::uint32_t> starts_;      // bucket offsets into order_
    std::vector<std::uint32_t> order_;
};

}  // namespace gwf
