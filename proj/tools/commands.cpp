#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "gwfract/error.hpp"
#include "gwfract/experiments.hpp"
#include "gwfract/io.hpp"

namespace gwf::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitCheckFailed = 1;
constexpr int kExitInconclusive = 3;

struct ModelOptions {
    std::string percolation;
    std::string ifs;
    std::string offspring;
};

struct Model {
    SimilarityIFS ifs;
    OffspringDistribution offspring;
    std::optional<PercolationSpec> perc;
    bool has_offspring = false;
};

void add_model_options(CLI::App* sub, ModelOptions& m, bool with_offspring = true) {
    sub->add_option("--percolation", m.percolation, "Fractal percolation shorthand, e.g. b=3,d=2,p=0.6");
    sub->add_option("--ifs", m.ifs, "IFS JSON file");
    if (with_offspring)
        sub->add_option("--offspring", m.offspring, "Offspring law: bin:N:p, bern:p0,p1,... or JSON");
}

Model resolve_model(const ModelOptions& o, bool need_offspring) {
    Model m;
    require(o.percolation.empty() || o.ifs.empty(), "--percolation and --ifs are mutually exclusive");
    if (!o.percolation.empty()) {
        m.perc = parse_percolation(o.percolation);
        m.ifs = percolation_ifs(m.perc->b, m.perc->d);
        std::size_t n = 1;
        for (int i = 0; i < m.perc->d; ++i) n *= static_cast<std::size_t>(m.perc->b);
        m.offspring = OffspringDistribution::binomial(n, m.perc->p);
        m.has_offspring = true;
    } else if (!o.ifs.empty()) {
        m.ifs = load_ifs(o.ifs);
    } else {
        fail(ErrorKind::InvalidInput, "one of --percolation or --ifs is required");
    }
    if (!o.offspring.empty()) {
        require(!m.perc, "--offspring cannot be combined with --percolation");
        m.offspring = parse_offspring(o.offspring);
        require(m.offspring.alphabet_size() == m.ifs.size(), "offspring alphabet must match the number of maps");
        m.has_offspring = true;
    }
    if (need_offspring) require(m.has_offspring, "an offspring law is required (--offspring or --percolation)");
    return m;
}

std::string tree_label(const Model& m) { return m.perc ? "percolation-tree" : "general-tree"; }

RasterSpec raster_for(const SimilarityIFS& ifs, int pixels) {
    require(pixels > 0, "--pixels must be positive");
    RasterSpec spec;
    spec.width = spec.height = pixels;
    if (ifs.osc() && ifs.osc()->kind == OscSet::Kind::Box) {
        spec.lo_x = ifs.osc()->lo[0];
        spec.lo_y = ifs.osc()->lo[1];
        spec.hi_x = ifs.osc()->hi[0];
        spec.hi_y = ifs.osc()->hi[1];
    } else {
        const Vec& c = ifs.ball_center();
        const double r = ifs.ball_radius();
        spec.lo_x = c[0] - r;
        spec.hi_x = c[0] + r;
        spec.lo_y = c[1] - r;
        spec.hi_y = c[1] + r;
    }
    return spec;
}

template <class F>
void write_stream(const std::string& path, F&& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::InvalidInput, "cannot write '" + path + "'");
    body(out);
}

void write_raster(const std::string& path, const PointCloud& cloud, RasterSpec spec) {
    write_stream(path, [&](std::ostream& o) { write_pgm(cloud, spec, o); });
}

void write_cloud(const std::string& path, const PointCloud& cloud, const std::vector<double>& masses = {}) {
    write_stream(path, [&](std::ostream& o) { write_cloud_csv(cloud, masses, o); });
}

std::string out_file(const Globals& g, const std::string& name) {
    if (g.out.empty()) return {};
    fs::create_directories(g.out);
    return (fs::path(g.out) / name).string();
}

PointCloud load_cloud(const std::string& path, double eps, std::vector<double>* masses) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::InvalidInput, "cannot read '" + path + "'");
    PointCloud cloud = read_csv(in, masses);
    require(eps >= 0.0, "--eps must be nonnegative");
    cloud.eps = eps;
    return cloud;
}

double bbox_diagonal(const PointCloud& cloud) {
    if (cloud.size() == 0) return 0.0;
    Vec lo = cloud.vec(0), hi = cloud.vec(0);
    for (std::size_t i = 1; i < cloud.size(); ++i) {
        lo = lo.cwiseMin(cloud.vec(i));
        hi = hi.cwiseMax(cloud.vec(i));
    }
    return (hi - lo).norm();
}

int verdict_exit(const std::string& verdict) {
    if (verdict == "pass") return 0;
    if (verdict == "fail") return kExitCheckFailed;
    return kExitInconclusive;
}

GStrategy parse_strategy(const std::string& s) {
    if (s == "auto") return GStrategy::Auto;
    if (s == "closed-form") return GStrategy::ClosedForm;
    if (s == "exact") return GStrategy::Exact;
    if (s == "monte-carlo") return GStrategy::MonteCarlo;
    fail(ErrorKind::InvalidInput, "unknown strategy '" + s + "'");
}

DiffuseMode parse_mode(const std::string& s) {
    if (s == "hull") return DiffuseMode::Hull;
    if (s == "cloud") return DiffuseMode::Cloud;
    fail(ErrorKind::InvalidInput, "unknown diffuseness mode '" + s + "'");
}

std::vector<Word> all_words(std::size_t n, std::size_t len) {
    std::vector<Word> out{Word{}};
    for (std::size_t l = 0; l < len; ++l) {
        std::vector<Word> next;
        next.reserve(out.size() * n);
        for (const auto& w : out)
            for (std::size_t i = 0; i < n; ++i) next.push_back(concat(w, Word{static_cast<Letter>(i)}));
        out = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    ModelOptions model;
    std::size_t depth = 4;
    std::string render, cloud, tree;
    int pixels = 512;
};

int run_simulate(const SimulateOpts& o, const Globals& g) {
    Model m = resolve_model(o.model, true);
    const std::uint64_t seed = derive_seed(g.seed, tree_label(m));
    GWSample s = sample_gw(m.offspring, o.depth, seed);
    PointCloud cloud = render(m.ifs, s.tree);
    json j;
    j["seed"] = g.seed;
    j["tree_seed"] = seed;
    j["depth"] = o.depth;
    j["offspring"] = m.offspring.describe();
    j["mean"] = m.offspring.mean();
    j["level_sizes"] = s.level_sizes;
    j["extinct_at"] = s.extinct_at ? json(*s.extinct_at) : json(nullptr);
    j["nodes"] = s.tree.node_count();
    j["points"] = cloud.size();
    j["eps"] = cloud.eps;
    const auto ks = kesten_stigum_series(s, m.offspring.mean());
    if (!ks.empty()) j["kesten_stigum"] = ks;
    if (!o.render.empty()) {
        RasterSpec spec = raster_for(m.ifs, o.pixels);
        if (m.perc) spec.fill = 0.5 * std::pow(static_cast<double>(m.perc->b), -static_cast<double>(o.depth));
        write_raster(o.render, cloud, spec);
        j["render"] = o.render;
    }
    if (!o.cloud.empty()) {
        write_cloud(o.cloud, cloud);
        j["cloud"] = o.cloud;
    }
    std::string tree_path = o.tree.empty() ? out_file(g, "tree.txt") : o.tree;
    if (!tree_path.empty()) {
        write_file(tree_path, s.tree.to_text());
        j["tree"] = tree_path;
    }
    emit(j, g);
    return 0;
}

// ---------------------------------------------------------------- extinction

struct ExtinctionOpts {
    ModelOptions model;
    std::size_t mc_trials = 0;
    std::size_t mc_depth = 30;
    double tol = 1e-14;
};

int run_extinction(const ExtinctionOpts& o, const Globals& g) {
    OffspringDistribution w;
    if (!o.model.percolation.empty() || !o.model.ifs.empty())
        w = resolve_model(o.model, true).offspring;
    else if (!o.model.offspring.empty())
        w = parse_offspring(o.model.offspring);
    else
        fail(ErrorKind::InvalidInput, "--offspring or --percolation is required");
    json j;
    j["offspring"] = w.describe();
    j["mean"] = w.mean();
    j["q"] = extinction_prob(w, o.tol);
    j["q_bisection"] = extinction_prob_bisection(w, o.tol);
    if (o.mc_trials > 0) {
        Proportion f = extinction_frequency(w, o.mc_depth, o.mc_trials, derive_seed(g.seed, "extinction-mc"));
        const double q = j["q"].get<double>();
        const double se = f.std_error();
        j["mc"] = {{"depth", o.mc_depth},
                   {"trials", f.trials},
                   {"frequency", f.value()},
                   {"std_error", se},
                   {"within_3sigma", std::abs(f.value() - q) <= 3.0 * se + 1e-12}};
    }
    emit(j, g);
    return 0;
}

// ---------------------------------------------------------------- moran

struct MoranOpts {
    ModelOptions model;
    double tol = 1e-13;
};

int run_moran(const MoranOpts& o, const Globals& g) {
    Model m = resolve_model(o.model, true);
    const double delta = moran_exponent(m.offspring, m.ifs.weights(), o.tol);
    json j;
    j["delta"] = delta;
    j["mean"] = m.offspring.mean();
    if (m.perc) {
        const double closed = std::log(m.offspring.mean()) / std::log(static_cast<double>(m.perc->b));
        j["closed_form"] = closed;
        j["abs_error"] = std::abs(delta - closed);
    }
    emit(j, g);
    return 0;
}

// ---------------------------------------------------------------- fixpoint

struct FixpointOpts {
    ModelOptions model;
    std::string collection;
    std::string strategy = "auto";
    std::size_t mc_samples = 100000;
    double tol = 1e-12;
    std::size_t iterates = 5;
};

int run_fixpoint(const FixpointOpts& o, const Globals& g) {
    OffspringDistribution w = !o.model.percolation.empty() ? resolve_model(o.model, true).offspring
                                                           : parse_offspring(o.model.offspring);
    require(!o.collection.empty(), "--collection is required");
    MonotoneCollection c = parse_collection(o.collection);
    GFunction gf{&w, &c, parse_strategy(o.strategy), o.mc_samples, derive_seed(g.seed, "fixpoint-mc")};
    FixedPointResult r = smallest_fixed_point(gf, o.tol);
    json j = to_json(r);
    j["offspring"] = w.describe();
    j["collection"] = c.describe();
    j["strategy"] = to_string(resolve_strategy(gf));
    std::vector<double> q = g_iterates(gf, o.iterates);
    json presence = json::array();
    for (double v : q) presence.push_back(1.0 - v);
    j["presence_by_length"] = presence;
    emit(j, g);
    return 0;
}

// ---------------------------------------------------------------- gk-curve

struct GkOpts {
    std::string percolation = "b=3,d=2,p=0.6";
    ConvergenceParams params;
    std::string curve;
};

int run_gk(GkOpts o, const Globals& g) {
    PercolationSpec ps = parse_percolation(o.percolation);
    o.params.b = ps.b;
    o.params.d = ps.d;
    o.params.p = ps.p;
    o.params.seed = g.seed;
    ExperimentReport r = exp_convergence_g_k(o.params);
    if (!o.curve.empty()) write_file(o.curve, points_csv(r));
    if (auto f = out_file(g, "gk-curve.json"); !f.empty()) write_file(f, to_json(r, g.timing).dump(2) + "\n");
    emit(to_json(r, g.timing), g);
    return verdict_exit(r.verdict);
}

// ---------------------------------------------------------------- extract

struct ExtractOpts {
    std::string pipeline = "percolation";
    ModelOptions model;
    PercolationParams perc;
    GeneralParams general;
    std::string render;
    int pixels = 512;
};

int run_extract(ExtractOpts o, const Globals& g) {
    ExtractedSubset s;
    if (o.pipeline == "percolation") {
        require(o.model.ifs.empty() && o.model.offspring.empty(), "the percolation pipeline takes --percolation only");
        PercolationSpec ps = parse_percolation(o.model.percolation.empty() ? "b=3,d=2,p=0.7" : o.model.percolation);
        o.perc.b = ps.b;
        o.perc.d = ps.d;
        o.perc.p = ps.p;
        o.perc.seed = g.seed;
        s = percolation_pipeline(o.perc);
    } else if (o.pipeline == "general") {
        Model m = resolve_model(o.model, true);
        o.general.seed = g.seed;
        o.general.scan_levels = o.perc.scan_levels;
        o.general.node_budget = o.perc.node_budget;
        s = general_pipeline(m.ifs, m.offspring, o.general);
    } else {
        fail(ErrorKind::InvalidInput, "--pipeline must be 'percolation' or 'general'");
    }
    json j = to_json(s);
    if (auto f = out_file(g, "subset.json"); !f.empty()) {
        write_file(f, j.dump(2) + "\n");
        write_file(out_file(g, "tree.txt"), s.subtree.to_text());
        write_stream(out_file(g, "measure.csv"), [&](std::ostream& out) { write_measure_csv(s.measure, out); });
        write_cloud(out_file(g, "cloud.csv"), s.cloud, s.masses);
    }
    if (!o.render.empty()) {
        RasterSpec spec = raster_for(s.ifs, o.pixels);
        write_raster(o.render, s.cloud, spec);
    }
    emit(j, g);
    return 0;
}

// ---------------------------------------------------------------- diffuse-cert

struct CertOpts {
    ModelOptions model;
    std::size_t level = 1;
    std::string set = "attractor";
    std::size_t set_depth = 6;
    std::string mode = "hull";
    DiffuseOptions opts;
};

int run_cert(CertOpts o, const Globals& g) {
    Model m = resolve_model(o.model, false);
    require(o.level >= 1, "--level must be at least 1");
    std::vector<SimilarityMap> maps;
    for (const auto& w : all_words(m.ifs.size(), o.level)) maps.push_back(word_map(m.ifs, w));
    PointCloud F;
    if (o.set == "attractor") {
        F = render_full(m.ifs, o.set_depth);
    } else if (o.set == "unit-cube") {
        F.d = m.ifs.dim();
        for (std::size_t mask = 0; mask < (std::size_t{1} << F.d); ++mask) {
            Vec p(F.d);
            for (int k = 0; k < F.d; ++k) p[k] = (mask >> k) & 1U ? 1.0 : 0.0;
            F.push(p);
        }
    } else {
        std::vector<double> ignored;
        F = load_cloud(o.set, 0.0, &ignored);
    }
    o.opts.mode = parse_mode(o.mode);
    DiffuseCertificate c = diffuseness_constant(maps, F, o.opts);
    json j = to_json(c);
    j["level"] = o.level;
    j["maps"] = maps.size();
    j["set"] = o.set;
    j["set_points"] = F.size();
    emit(j, g);
    return c.certified ? 0 : kExitInconclusive;
}

// ---------------------------------------------------------------- check-diffuse

struct CheckDiffuseOpts {
    std::string cloud;
    double eps = 0.0;
    double beta = 0.0;
    double xi_min = 0.0, xi_max = 0.0;
    std::size_t scale_count = 3;
    std::size_t samples = 100;
};

int run_check_diffuse(const CheckDiffuseOpts& o, const Globals& g) {
    require(!o.cloud.empty(), "--cloud is required");
    require(o.beta > 0.0, "--beta must be positive");
    PointCloud cloud = load_cloud(o.cloud, o.eps, nullptr);
    double hi = o.xi_max > 0.0 ? o.xi_max : bbox_diagonal(cloud) / 4.0;
    double lo = o.xi_min > 0.0 ? o.xi_min : std::max(4.0 * cloud.eps, hi / 16.0);
    require(lo > 0.0 && lo <= hi, "empty scale window");
    DiffuseCheckReport r = empirical_diffuse_check(cloud, o.beta, geometric_ladder(lo, hi, o.scale_count), o.samples,
                                                   derive_seed(g.seed, "check-diffuse"));
    json j = to_json(r);
    j["beta"] = o.beta;
    emit(j, g);
    return r.pass ? 0 : kExitCheckFailed;
}

// ---------------------------------------------------------------- check-ahlfors

struct AhlforsOpts {
    std::string cloud;
    double eps = 0.0;
    double alpha = 0.0;
    std::size_t samples = 1000;
    double r_lo = 0.0, r_hi = 0.0;
    std::size_t radii = 8;
    double max_spread = 1e3;
};

int run_ahlfors(const AhlforsOpts& o, const Globals& g) {
    require(!o.cloud.empty(), "--cloud is required");
    require(o.alpha > 0.0, "--alpha must be positive");
    std::vector<double> masses;
    PointCloud cloud = load_cloud(o.cloud, o.eps, &masses);
    require(cloud.size() > 0, "cloud is empty");
    if (masses.empty()) masses.assign(cloud.size(), 1.0 / static_cast<double>(cloud.size()));
    double hi = o.r_hi > 0.0 ? o.r_hi : bbox_diagonal(cloud) / 4.0;
    double lo = o.r_lo > 0.0 ? o.r_lo : std::max(4.0 * cloud.eps, hi / 64.0);
    AhlforsResult r = ahlfors_ratio_check(cloud, masses, o.alpha, o.samples, derive_seed(g.seed, "check-ahlfors"), lo,
                                          hi, o.radii);
    json j = to_json(r);
    j["alpha"] = o.alpha;
    j["spread"] = r.spread();
    j["pass"] = r.spread() <= o.max_spread;
    emit(j, g);
    return r.spread() <= o.max_spread ? 0 : kExitCheckFailed;
}

// ---------------------------------------------------------------- boxdim

struct BoxdimOpts {
    std::string cloud;
    double eps = 0.0;
    ModelOptions model;
    std::size_t depth = 6;
    std::size_t scales = 10;
};

int run_boxdim(const BoxdimOpts& o, const Globals& g) {
    PointCloud cloud;
    json j;
    if (!o.cloud.empty()) {
        cloud = load_cloud(o.cloud, o.eps, nullptr);
    } else {
        Model m = resolve_model(o.model, true);
        GWSample s = sample_gw(m.offspring, o.depth, derive_seed(g.seed, tree_label(m)));
        cloud = render(m.ifs, s.tree);
        j["moran"] = moran_exponent(m.offspring, m.ifs.weights());
        j["depth"] = o.depth;
    }
    require(cloud.size() > 1, "box dimension needs at least two points");
    BoxDimResult r = box_dimension(cloud, o.scales);
    j.update(to_json(r));
    j["points"] = cloud.size();
    emit(j, g);
    return 0;
}

// ---------------------------------------------------------------- experiment

struct ExperimentOpts {
    std::string id;
    std::string percolation;
    std::optional<double> c, s, p, eps, tolerance;
    std::optional<std::size_t> kmax, trials, depth, raw_depth, balls, samples, level;
    std::vector<double> cs, betas;
    std::string curve;
};

int run_experiment(const ExperimentOpts& o, const Globals& g) {
    require(!o.id.empty(), "an experiment id is required");
    std::optional<PercolationSpec> ps;
    if (!o.percolation.empty()) ps = parse_percolation(o.percolation);
    ExperimentReport r;
    if (o.id == "convergence-gk") {
        ConvergenceParams P;
        if (ps) P.b = ps->b, P.d = ps->d, P.p = ps->p;
        if (o.c) P.c = *o.c;
        if (o.s) P.s = *o.s;
        if (o.kmax) P.k_max = *o.kmax;
        if (o.trials) P.trials = *o.trials;
        if (o.tolerance) P.tolerance = *o.tolerance;
        P.seed = g.seed;
        r = exp_convergence_g_k(P);
    } else if (o.id == "dimension-ladder") {
        LadderParams P;
        if (ps) P.b = ps->b, P.d = ps->d, P.p = ps->p;
        if (!o.cs.empty()) P.cs = o.cs;
        if (o.raw_depth) P.raw_depth = *o.raw_depth;
        if (o.tolerance) P.tolerance = *o.tolerance;
        P.seed = g.seed;
        r = exp_dimension_ladder(P);
    } else if (o.id == "non-diffuseness") {
        NonDiffuseParams P;
        if (ps) P.b = ps->b, P.d = ps->d, P.p = ps->p;
        if (o.depth) P.depth = *o.depth;
        if (!o.betas.empty()) P.betas = o.betas;
        if (o.balls) P.balls = *o.balls;
        if (o.c) P.c = *o.c;
        if (o.samples) P.samples_per_scale = *o.samples;
        P.seed = g.seed;
        r = exp_non_diffuseness(P);
    } else if (o.id == "appendix-b") {
        AppendixBParams P;
        if (o.p) P.p = *o.p;
        if (o.eps) P.eps = *o.eps;
        if (o.trials) P.trials = *o.trials;
        if (o.level) P.level = *o.level;
        P.seed = g.seed;
        r = exp_appendix_b(P);
    } else {
        std::string known;
        for (const auto& id : experiment_ids()) known += (known.empty() ? "" : ", ") + id;
        fail(ErrorKind::InvalidInput, "unknown experiment '" + o.id + "' (known: " + known + ")");
    }
    json j = to_json(r, g.timing);
    if (auto f = out_file(g, r.id + ".json"); !f.empty()) {
        write_file(f, j.dump(2) + "\n");
        write_file(out_file(g, r.id + ".csv"), points_csv(r));
    }
    if (!o.curve.empty()) write_file(o.curve, points_csv(r));
    emit(j, g);
    return verdict_exit(r.verdict);
}

// ---------------------------------------------------------------- render

struct RenderOpts {
    ModelOptions model;
    std::size_t depth = 6;
    std::string tree, star, root, render, cloud;
    int pixels = 512;
};

int run_render(const RenderOpts& o, const Globals& g) {
    Model m = resolve_model(o.model, false);
    require(o.tree.empty() || o.star.empty(), "--tree and --star are mutually exclusive");
    PointCloud cloud;
    std::string source = "attractor";
    if (!o.tree.empty()) {
        FiniteTree t = FiniteTree::from_text(read_file(o.tree));
        require(t.alphabet_size() == m.ifs.size(), "tree alphabet must match the number of maps");
        cloud = render(m.ifs, t);
        source = "tree";
    } else if (!o.star.empty()) {
        StarTree t = StarTree::from_text(read_file(o.star));
        cloud = render(m.ifs, t, word_from_string(o.root.empty() ? "-" : o.root));
        source = "star-tree";
    } else {
        cloud = render_full(m.ifs, o.depth);
    }
    require(!o.render.empty() || !o.cloud.empty(), "nothing to write: give --render and/or --cloud");
    if (!o.render.empty()) write_raster(o.render, cloud, raster_for(m.ifs, o.pixels));
    if (!o.cloud.empty()) write_cloud(o.cloud, cloud);
    emit(json{{"source", source}, {"points", cloud.size()}, {"eps", cloud.eps}}, g);
    return 0;
}

template <class T>
std::shared_ptr<T> keep() {
    return std::make_shared<T>();
}

}  // namespace

void emit(const json& result, const Globals& g) {
    if (g.json) {
        std::cout << result.dump(2) << "\n";
        return;
    }
    for (const auto& [key, value] : result.items()) {
        std::cout << key << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
    }
}

void register_commands(CLI::App& app, Globals& g, Action& action) {
    app.add_flag("--json", g.json, "Print results as JSON on stdout");
    app.add_flag("--timing", g.timing, "Include wall-clock runtimes in experiment reports");
    app.add_option("--threads", g.threads, "Worker threads (default: GWFRACT_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", g.seed, "Master seed; every random stream is derived from it");
    app.add_option("--out", g.out, "Output directory for report files");
    app.add_option("--config", g.config, "JSON config; command-line flags take precedence");

    {
        auto o = keep<SimulateOpts>();
        auto* sub = app.add_subcommand("simulate", "Sample a Galton-Watson fractal and render it");
        add_model_options(sub, o->model);
        sub->add_option("--depth", o->depth, "Sample depth");
        sub->add_option("--render", o->render, "PGM raster output");
        sub->add_option("--pixels", o->pixels, "Raster side in pixels");
        sub->add_option("--cloud", o->cloud, "Cloud CSV output");
        sub->add_option("--tree", o->tree, "Tree text output");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_simulate(*o, g); }; });
    }
    {
        auto o = keep<ExtinctionOpts>();
        auto* sub = app.add_subcommand("extinction", "Extinction probability with optional Monte Carlo check");
        add_model_options(sub, o->model);
        sub->add_option("--mc-trials", o->mc_trials, "Monte Carlo trees (0 disables)");
        sub->add_option("--mc-depth", o->mc_depth, "Depth used as extinction proxy");
        sub->add_option("--tol", o->tol, "Fixed-point tolerance");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_extinction(*o, g); }; });
    }
    {
        auto o = keep<MoranOpts>();
        auto* sub = app.add_subcommand("moran", "Solve the Moran equation for the dimension");
        add_model_options(sub, o->model);
        sub->add_option("--tol", o->tol, "Bisection tolerance");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_moran(*o, g); }; });
    }
    {
        auto o = keep<FixpointOpts>();
        auto* sub = app.add_subcommand("fixpoint", "Smallest fixed point of the subtree g-function");
        sub->add_option("--offspring", o->model.offspring, "Offspring law");
        sub->add_option("--percolation", o->model.percolation, "Percolation shorthand");
        sub->add_option("--collection", o->collection, "Monotone collection: ary:a, gen:0-1;2 or JSON");
        sub->add_option("--strategy", o->strategy, "auto | closed-form | exact | monte-carlo");
        sub->add_option("--mc-samples", o->mc_samples, "Samples per Monte Carlo evaluation");
        sub->add_option("--tol", o->tol, "Iteration tolerance");
        sub->add_option("--iterates", o->iterates, "Report 1 - g^n(0) for n = 1..iterates");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_fixpoint(*o, g); }; });
    }
    {
        auto o = keep<GkOpts>();
        auto* sub = app.add_subcommand("gk-curve", "Curve of g_{k,ceil(c^k)}(s) over k");
        sub->add_option("--percolation", o->percolation, "Percolation shorthand");
        sub->add_option("--c", o->params.c, "Growth constant c");
        sub->add_option("--s", o->params.s, "Thinning parameter s");
        sub->add_option("--kmax", o->params.k_max, "Largest k");
        sub->add_option("--trials", o->params.trials, "Monte Carlo trials when exact evaluation is too large");
        sub->add_option("--tolerance", o->params.tolerance, "Allowed final distance to the extinction probability");
        sub->add_option("--curve", o->curve, "CSV output of the curve");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_gk(*o, g); }; });
    }
    {
        auto o = keep<ExtractOpts>();
        auto* sub = app.add_subcommand("extract", "Extract a diffuse Ahlfors-regular subset from a sample");
        sub->add_option("--pipeline", o->pipeline, "percolation | general");
        add_model_options(sub, o->model);
        sub->add_option("--c", o->perc.c, "Percolation: target growth constant");
        sub->add_option("--k", o->perc.k, "Percolation: compression block length (0 = default)");
        sub->add_option("--n", o->perc.n, "Percolation: compressed heights (0 = default)");
        sub->add_option("--mode", o->perc.mode, "Percolation: balanced | block");
        sub->add_option("--c0", o->perc.c0, "Percolation: diffuseness constant required of child sets");
        sub->add_option("--attempts", o->perc.attempts, "Percolation: reshuffles per node");
        sub->add_option("--scan-levels", o->perc.scan_levels, "Levels of candidate roots scanned");
        sub->add_option("--node-budget", o->perc.node_budget, "Maximum DP node evaluations");
        sub->add_option("--rho", o->general.rho, "General: section scale rho");
        sub->add_option("--alpha", o->general.alpha, "General: target exponent alpha");
        sub->add_option("--section-c", o->general.c, "General: required diffuseness constant (<= 0: automatic)");
        sub->add_option("--height", o->general.n, "General: subtree height");
        sub->add_option("--max-reduction", o->general.max_reduction, "General: deepest section power tried");
        sub->add_option("--render-depth", o->general.render_depth, "General: attractor depth used as F");
        sub->add_option("--render", o->render, "PGM raster of the extracted subset");
        sub->add_option("--pixels", o->pixels, "Raster side in pixels");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_extract(*o, g); }; });
    }
    {
        auto o = keep<CertOpts>();
        auto* sub = app.add_subcommand("diffuse-cert", "Certify the (F,c)-diffuseness constant of an IFS");
        add_model_options(sub, o->model, false);
        sub->add_option("--level", o->level, "Use the maps of all words of this length");
        sub->add_option("--set", o->set, "F: attractor | unit-cube | path to a cloud CSV");
        sub->add_option("--set-depth", o->set_depth, "Render depth when F is the attractor");
        sub->add_option("--mode", o->mode, "hull | cloud");
        sub->add_option("--directions", o->opts.directions, "Initial direction grid size");
        sub->add_option("--tol", o->opts.tol, "Gap between certified bounds at which to stop");
        sub->add_option("--max-evaluations", o->opts.max_evaluations, "Evaluation budget");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_cert(*o, g); }; });
    }
    {
        auto o = keep<CheckDiffuseOpts>();
        auto* sub = app.add_subcommand("check-diffuse", "Empirical hyperplane-diffuseness check of a cloud");
        sub->add_option("--cloud", o->cloud, "Cloud CSV");
        sub->add_option("--eps", o->eps, "Resolution of the cloud");
        sub->add_option("--beta", o->beta, "Diffuseness constant to test");
        sub->add_option("--xi-min", o->xi_min, "Smallest scale");
        sub->add_option("--xi-max", o->xi_max, "Largest scale");
        sub->add_option("--scale-count", o->scale_count, "Scales on the ladder");
        sub->add_option("--samples", o->samples, "Balls per scale");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_check_diffuse(*o, g); }; });
    }
    {
        auto o = keep<AhlforsOpts>();
        auto* sub = app.add_subcommand("check-ahlfors", "Ahlfors regularity ratios of a weighted cloud");
        sub->add_option("--cloud", o->cloud, "Cloud CSV with optional mass column");
        sub->add_option("--eps", o->eps, "Resolution of the cloud");
        sub->add_option("--alpha", o->alpha, "Exponent");
        sub->add_option("--samples", o->samples, "Sampled (x, r) pairs over all radii");
        sub->add_option("--r-lo", o->r_lo, "Smallest radius");
        sub->add_option("--r-hi", o->r_hi, "Largest radius");
        sub->add_option("--radii", o->radii, "Radii on the ladder");
        sub->add_option("--max-spread", o->max_spread, "Largest accepted c2/c1");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_ahlfors(*o, g); }; });
    }
    {
        auto o = keep<BoxdimOpts>();
        auto* sub = app.add_subcommand("boxdim", "Box-counting dimension of a cloud or a fresh sample");
        sub->add_option("--cloud", o->cloud, "Cloud CSV");
        sub->add_option("--eps", o->eps, "Resolution of the cloud");
        add_model_options(sub, o->model);
        sub->add_option("--depth", o->depth, "Sample depth when no cloud is given");
        sub->add_option("--scales", o->scales, "Scales on the ladder");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_boxdim(*o, g); }; });
    }
    {
        auto o = keep<ExperimentOpts>();
        auto* sub = app.add_subcommand("experiment", "Run a scripted experiment");
        sub->add_option("id", o->id, "convergence-gk | dimension-ladder | non-diffuseness | appendix-b");
        sub->add_option("--percolation", o->percolation, "Percolation shorthand");
        sub->add_option("--c", o->c, "Growth constant");
        sub->add_option("--s", o->s, "Thinning parameter");
        sub->add_option("--p", o->p, "Retention probability (appendix-b)");
        sub->add_option("--eps", o->eps, "Perturbation (appendix-b)");
        sub->add_option("--tolerance", o->tolerance, "Verdict tolerance");
        sub->add_option("--kmax", o->kmax, "Largest k");
        sub->add_option("--trials", o->trials, "Monte Carlo trials");
        sub->add_option("--depth", o->depth, "Sample depth");
        sub->add_option("--raw-depth", o->raw_depth, "Depth of the raw sample rendered for contrast");
        sub->add_option("--balls", o->balls, "Flat-ball search budget");
        sub->add_option("--samples", o->samples, "Balls per scale in empirical checks");
        sub->add_option("--level", o->level, "Subtree length (appendix-b)");
        sub->add_option("--cs", o->cs, "Growth constants of the ladder");
        sub->add_option("--betas", o->betas, "Flatness thresholds");
        sub->add_option("--curve", o->curve, "CSV output of the points");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_experiment(*o, g); }; });
    }
    {
        auto o = keep<RenderOpts>();
        auto* sub = app.add_subcommand("render", "Render an attractor, a sampled tree or an extracted subtree");
        add_model_options(sub, o->model, false);
        sub->add_option("--depth", o->depth, "Attractor depth when no tree is given");
        sub->add_option("--tree", o->tree, "Finite tree text file");
        sub->add_option("--star", o->star, "Extracted subtree text file");
        sub->add_option("--root", o->root, "Root word of the subtree ('-' for empty)");
        sub->add_option("--render", o->render, "PGM raster output");
        sub->add_option("--cloud", o->cloud, "Cloud CSV output");
        sub->add_option("--pixels", o->pixels, "Raster side in pixels");
        sub->callback([o, &g, &action] { action = [o, &g] { return run_render(*o, g); }; });
    }
}

}  // namespace gwf::cli
