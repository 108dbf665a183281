#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "gwfract/error.hpp"
#include "gwfract/geometry.hpp"

namespace gwf {

namespace {

// Images φ_i(p) of every cloud point, centred at o so that projections are
// Lipschitz in the direction with constant max ‖φ_i(p) - o‖.
struct Images {
    int d = 0;
    std::vector<std::vector<double>> pts;  // per map, row-major
    std::vector<double> pad;               // per map: r_i·eps/2
    double lipschitz = 0.0;
    Vec origin;
};

Images build_images(const std::vector<SimilarityMap>& maps, const PointCloud& F) {
    Images im;
    im.d = F.d;
    Vec o = Vec::Zero(F.d);
    std::size_t count = 0;
    for (const auto& m : maps)
        for (std::size_t j = 0; j < F.size(); ++j) {
            o += m.apply(F.vec(j));
            ++count;
        }
    o /= static_cast<double>(count);
    im.origin = o;
    for (const auto& m : maps) {
        std::vector<double> pts;
        for (std::size_t j = 0; j < F.size(); ++j) {
            Vec q = m.apply(F.vec(j)) - o;
            im.lipschitz = std::max(im.lipschitz, q.norm() + m.r * F.eps / 2.0);
            for (int k = 0; k < F.d; ++k) pts.push_back(q[k]);
        }
        im.pts.push_back(std::move(pts));
        im.pad.push_back(m.r * F.eps / 2.0);
    }
    return im;
}

// u from hyperspherical angles; every partial derivative has norm <= 1.
Vec direction(const std::vector<double>& a, int d) {
    Vec u(d);
    double s = 1.0;
    for (int k = 0; k < d - 1; ++k) {
        u[k] = s * std::cos(a[static_cast<std::size_t>(k)]);
        s *= std::sin(a[static_cast<std::size_t>(k)]);
    }
    u[d - 1] = s;
    return u;
}

void projections(const Images& im, std::size_t i, const Vec& u, std::vector<double>& out) {
    const auto& p = im.pts[i];
    const std::size_t n = p.size() / static_cast<std::size_t>(im.d);
    out.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < im.d; ++k) s += u[k] * p[j * static_cast<std::size_t>(im.d) + static_cast<std::size_t>(k)];
        out[j] = s;
    }
}

// min_b max_i dist(image_i, {u·x = b}) with the hull of each image.
double hull_value(const Images& im, const Vec& u, double* b_out) {
    double max_lo = -std::numeric_limits<double>::infinity();
    double min_hi = std::numeric_limits<double>::infinity();
    std::vector<double> pr;
    for (std::size_t i = 0; i < im.pts.size(); ++i) {
        projections(im, i, u, pr);
        auto [lo, hi] = std::minmax_element(pr.begin(), pr.end());
        max_lo = std::max(max_lo, *lo - im.pad[i]);
        min_hi = std::min(min_hi, *hi + im.pad[i]);
    }
    if (b_out) *b_out = 0.5 * (max_lo + min_hi);
    return std::max(0.0, 0.5 * (max_lo - min_hi));
}

using Interval = std::pair<double, double>;

// Union of [s - t, s + t] over sorted s, merged.
std::vector<Interval> cover(const std::vector<double>& sorted, double t) {
    std::vector<Interval> out;
    for (double s : sorted) {
        if (!out.empty() && s - t <= out.back().second)
            out.back().second = s + t;
        else
            out.push_back({s - t, s + t});
    }
    return out;
}

std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b) {
    std::vector<Interval> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double lo = std::max(a[i].first, b[j].first), hi = std::min(a[i].second, b[j].second);
        if (lo <= hi) out.push_back({lo, hi});
        (a[i].second < b[j].second ? i : j)++;
    }
    return out;
}

// Same objective with the images as finite point sets, each point padded by r_i·eps/2.
double cloud_value(const Images& im, const Vec& u, double* b_out) {
    std::vector<std::vector<double>> pr(im.pts.size());
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < im.pts.size(); ++i) {
        projections(im, i, u, pr[i]);
        std::sort(pr[i].begin(), pr[i].end());
        hi = std::max(hi, pr[i].back() - pr[i].front());
    }
    hi += 1.0;
    auto feasible = [&](double t, double* b) {
        std::vector<Interval> acc = cover(pr[0], t + im.pad[0]);
        for (std::size_t i = 1; i < pr.size() && !acc.empty(); ++i) acc = intersect(acc, cover(pr[i], t + im.pad[i]));
        if (acc.empty()) return false;
        if (b) *b = 0.5 * (acc[0].first + acc[0].second);
        return true;
    };
    if (feasible(0.0, b_out)) return 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid, nullptr) ? hi : lo) = mid;
    }
    feasible(hi, b_out);
    return hi;
}

struct Box {
    std::vector<double> lo, hi;
    double value = 0.0;  // objective at the centre
    double bound = 0.0;  // certified lower bound over the box
};

}  // namespace

DiffuseCertificate diffuseness_constant(const std::vector<SimilarityMap>& maps, const PointCloud& F,
                                        const DiffuseOptions& opts) {
    require(!maps.empty(), "diffuseness needs at least one map");
    require(F.size() > 0, "diffuseness needs a nonempty F");
    const int d = F.d;
    for (const auto& m : maps) require(m.dim() == d, "map and cloud dimension differ");

    DiffuseCertificate cert;
    if (maps.size() == 1) {
        // A hyperplane through any point of the single image always meets it.
        cert.witness.u = Vec::Zero(d);
        cert.witness.u[0] = 1.0;
        cert.witness.b = maps[0].apply(F.vec(0))[0];
        cert.note = "single map: every image meets a hyperplane through it";
        return cert;
    }

    // Hull mode only sees the convex hull of F.
    const Images im = build_images(maps, opts.mode == DiffuseMode::Hull ? hull_vertices(F) : F);
    auto eval = [&](const Vec& u, double* b) {
        return opts.mode == DiffuseMode::Hull ? hull_value(im, u, b) : cloud_value(im, u, b);
    };
    if (d == 1) {
        Vec u = Vec::Ones(1);
        double b = 0.0;
        cert.c_low = cert.c_up = eval(u, &b);
        cert.witness.u = u;
        cert.witness.b = b;
        return cert;
    }

    const std::size_t dims = static_cast<std::size_t>(d - 1);
    Box root;
    root.lo.assign(dims, 0.0);
    root.hi.assign(dims, M_PI);
    if (d == 2) {
        root.hi[0] = M_PI;
    } else {
        root.hi[0] = M_PI / 2.0;
        root.hi[dims - 1] = 2.0 * M_PI;
    }
    const double L = im.lipschitz;
    auto score = [&](Box& b) {
        std::vector<double> c(dims);
        double spread = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            c[k] = 0.5 * (b.lo[k] + b.hi[k]);
            spread += 0.5 * (b.hi[k] - b.lo[k]);
        }
        b.value = eval(direction(c, d), nullptr);
        b.bound = std::max(0.0, b.value - L * spread);
    };

    // Initial grid with about `directions` cells.
    std::vector<Box> boxes{root};
    const std::size_t per_axis =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(opts.directions), 1.0 / static_cast<double>(dims)))));
    for (std::size_t k = 0; k < dims; ++k) {
        std::vector<Box> next;
        for (const auto& b : boxes)
            for (std::size_t s = 0; s < per_axis; ++s) {
                Box c = b;
                double w = (b.hi[k] - b.lo[k]) / static_cast<double>(per_axis);
                c.lo[k] = b.lo[k] + w * static_cast<double>(s);
                c.hi[k] = c.lo[k] + w;
                next.push_back(std::move(c));
            }
        boxes = std::move(next);
    }

    auto cmp = [](const Box& a, const Box& b) { return a.bound > b.bound; };
    std::priority_queue<Box, std::vector<Box>, decltype(cmp)> queue(cmp);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_angles;
    std::size_t evaluations = 0;
    auto absorb = [&](std::vector<Box>& batch) {
        auto scored = map_indexed<Box>(
            batch.size(),
            [&](std::size_t i) {
                Box b = batch[i];
                score(b);
                return b;
            },
            opts.exec);
        evaluations += scored.size();
        for (auto& b : scored) {
            if (b.value < best) {
                best = b.value;
                best_angles.resize(dims);
                for (std::size_t k = 0; k < dims; ++k) best_angles[k] = 0.5 * (b.lo[k] + b.hi[k]);
            }
            queue.push(std::move(b));
        }
    };
    absorb(boxes);

    const std::size_t batch_size = 64;
    while (!queue.empty()) {
        if (best - queue.top().bound <= opts.tol) break;
        if (evaluations >= opts.max_evaluations) break;
        std::vector<Box> batch;
        while (!queue.empty() && batch.size() < batch_size && best - queue.top().bound > opts.tol) {
            Box b = queue.top();
            queue.pop();
            std::size_t k = 0;
            for (std::size_t j = 1; j < dims; ++j)
                if (b.hi[j] - b.lo[j] > b.hi[k] - b.lo[k]) k = j;
            double mid = 0.5 * (b.lo[k] + b.hi[k]);
            Box left = b, right = b;
            left.hi[k] = mid;
            right.lo[k] = mid;
            batch.push_back(std::move(left));
            batch.push_back(std::move(right));
        }
        absorb(batch);
    }

    cert.c_low = queue.empty() ? best : std::min(best, queue.top().bound);
    cert.c_up = best;
    cert.tolerance = cert.c_up - cert.c_low;
    cert.certified = cert.tolerance <= opts.tol;
    double b = 0.0;
    cert.witness.u = direction(best_angles, d);
    eval(cert.witness.u, &b);
    // Offsets were computed relative to the image centroid.
    cert.witness.b = b + cert.witness.u.dot(im.origin);
    if (cert.c_up <= 0.0) cert.note = "images meet a common hyperplane";
    else if (!cert.certified) cert.note = "evaluation budget reached before the requested tolerance";
    return cert;
}

double diffuseness_bruteforce_2d(const std::vector<SimilarityMap>& maps, const PointCloud& F, std::size_t angles,
                                 std::size_t offsets, DiffuseMode mode) {
    require(F.d == 2, "brute-force diffuseness is planar only");
    require(angles >= 1 && offsets >= 2, "brute-force grid too small");
    std::vector<std::vector<Vec>> imgs;
    std::vector<double> pad;
    for (const auto& m : maps) {
        std::vector<Vec> v;
        for (std::size_t j = 0; j < F.size(); ++j) v.push_back(m.apply(F.vec(j)));
        imgs.push_back(std::move(v));
        pad.push_back(m.r * F.eps / 2.0);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < angles; ++a) {
        double th = M_PI * static_cast<double>(a) / static_cast<double>(angles);
        Vec u(2);
        u << std::cos(th), std::sin(th);
        std::vector<std::vector<double>> pr(imgs.size());
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            for (const auto& p : imgs[i]) pr[i].push_back(u.dot(p));
            auto [mn, mx] = std::minmax_element(pr[i].begin(), pr[i].end());
            lo = std::min(lo, *mn);
            hi = std::max(hi, *mx);
        }
        for (std::size_t o = 0; o < offsets; ++o) {
            double b = lo + (hi - lo) * static_cast<double>(o) / static_cast<double>(offsets - 1);
            double worst = 0.0;
            for (std::size_t i = 0; i < imgs.size(); ++i) {
                double dist;
                auto [mn, mx] = std::minmax_element(pr[i].begin(), pr[i].end());
                if (mode == DiffuseMode::Hull) {
                    dist = std::max({0.0, *mn - pad[i] - b, b - *mx - pad[i]});
                } else {
                    dist = std::numeric_limits<double>::infinity();
                    for (double s : pr[i]) dist = std::min(dist, std::fabs(s - b));
                    dist = std::max(0.0, dist - pad[i]);
                }
                worst = std::max(worst, dist);
            }
            best = std::min(best, worst);
        }
    }
    return best;
}

}  // namespace gwf
