#include "gwfract/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gwfract/error.hpp"

namespace gwf {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::InvalidInput, "cannot read " + what + " from '" + s + "'");
    }
}

long to_long(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::InvalidInput, "cannot read " + what + " from '" + s + "'");
    }
}

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) fail(ErrorKind::InvalidInput, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorKind::InvalidInput, std::string("field '") + key + "': " + e.what());
    }
}

Vec vec_from(const json& j, int d, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != d)
        fail(ErrorKind::InvalidInput, std::string(what) + " must be an array of length " + std::to_string(d));
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = j[static_cast<std::size_t>(k)].get<double>();
    return v;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
    return a;
}

}  // namespace

PercolationSpec parse_percolation(const std::string& text) {
    PercolationSpec s;
    bool hb = false, hd = false, hp = false;
    for (const auto& part : split(text, ',')) {
        auto eq = part.find('=');
        require(eq != std::string::npos, "percolation shorthand expects b=..,d=..,p=.. but got '" + part + "'");
        std::string key = part.substr(0, eq), val = part.substr(eq + 1);
        if (key == "b") s.b = static_cast<int>(to_long(val, "b")), hb = true;
        else if (key == "d") s.d = static_cast<int>(to_long(val, "d")), hd = true;
        else if (key == "p") s.p = to_double(val, "p"), hp = true;
        else fail(ErrorKind::InvalidInput, "unknown percolation key '" + key + "'");
    }
    require(hb && hd && hp, "percolation shorthand needs b, d and p");
    require(s.b >= 2 && s.d >= 1 && s.d <= kMaxDim, "percolation needs b >= 2 and 1 <= d <= 8");
    require(s.p > 0.0 && s.p <= 1.0, "percolation p must lie in (0,1]");
    return s;
}

OffspringDistribution offspring_from_json(const json& j) {
    const auto kind = field<std::string>(j, "kind");
    if (kind == "binomial") return OffspringDistribution::binomial(field<std::size_t>(j, "n"), field<double>(j, "p"));
    if (kind == "bernoulli") return OffspringDistribution::bernoulli(field<std::vector<double>>(j, "p"));
    if (kind == "table") {
        std::vector<OffspringDistribution::Row> rows;
        for (const auto& r : field<json>(j, "rows"))
            rows.push_back({field<std::vector<Letter>>(r, "subset"), field<double>(r, "prob")});
        return OffspringDistribution::table(field<std::size_t>(j, "alphabet"), std::move(rows));
    }
    fail(ErrorKind::InvalidInput, "unknown offspring kind '" + kind + "'");
}

OffspringDistribution parse_offspring(const std::string& text) {
    if (!text.empty() && text.front() == '{') {
        try {
            return offspring_from_json(json::parse(text));
        } catch (const json::parse_error& e) {
            fail(ErrorKind::InvalidInput, std::string("offspring JSON: ") + e.what());
        }
    }
    auto parts = split(text, ':');
    if (parts.size() == 3 && parts[0] == "bin") {
        long n = to_long(parts[1], "binomial size");
        require(n >= 1, "binomial size must be positive");
        return OffspringDistribution::binomial(static_cast<std::size_t>(n), to_double(parts[2], "binomial p"));
    }
    if (parts.size() == 2 && parts[0] == "bern") {
        std::vector<double> p;
        for (const auto& s : split(parts[1], ',')) p.push_back(to_double(s, "bernoulli p"));
        return OffspringDistribution::bernoulli(std::move(p));
    }
    fail(ErrorKind::InvalidInput, "offspring spec must be bin:N:p, bern:p0,p1,... or JSON; got '" + text + "'");
}

json to_json(const OffspringDistribution& w) {
    json j;
    switch (w.kind()) {
        case OffspringDistribution::Kind::Binomial:
            j = {{"kind", "binomial"}, {"n", w.alphabet_size()}, {"p", w.binomial_p()}};
            break;
        case OffspringDistribution::Kind::Bernoulli:
            j = {{"kind", "bernoulli"}, {"p", w.letter_probs()}};
            break;
        case OffspringDistribution::Kind::Table: {
            json rows = json::array();
            for (const auto& r : w.rows()) rows.push_back({{"subset", r.subset}, {"prob", r.prob}});
            j = {{"kind", "table"}, {"alphabet", w.alphabet_size()}, {"rows", rows}};
            break;
        }
    }
    j["mean"] = w.mean();
    return j;
}

MonotoneCollection collection_from_json(const json& j) {
    const auto kind = field<std::string>(j, "kind");
    if (kind == "ary") return MonotoneCollection::ary(field<std::size_t>(j, "a"));
    if (kind == "generators")
        return MonotoneCollection::generators(field<std::vector<std::vector<Letter>>>(j, "sets"));
    fail(ErrorKind::InvalidInput, "unknown collection kind '" + kind + "'");
}

MonotoneCollection parse_collection(const std::string& text) {
    if (!text.empty() && text.front() == '{') {
        try {
            return collection_from_json(json::parse(text));
        } catch (const json::parse_error& e) {
            fail(ErrorKind::InvalidInput, std::string("collection JSON: ") + e.what());
        }
    }
    auto colon = text.find(':');
    require(colon != std::string::npos, "collection spec must be ary:a, gen:... or JSON; got '" + text + "'");
    std::string kind = text.substr(0, colon), rest = text.substr(colon + 1);
    if (kind == "ary") {
        long a = to_long(rest, "arity");
        require(a >= 0, "arity must be nonnegative");
        return MonotoneCollection::ary(static_cast<std::size_t>(a));
    }
    if (kind == "gen") {
        std::vector<std::vector<Letter>> sets;
        for (const auto& g : split(rest, ';')) {
            std::vector<Letter> set;
            for (const auto& l : split(g, '-'))
                if (!l.empty()) set.push_back(static_cast<Letter>(to_long(l, "letter")));
            sets.push_back(std::move(set));
        }
        return MonotoneCollection::generators(std::move(sets));
    }
    fail(ErrorKind::InvalidInput, "unknown collection kind '" + kind + "'");
}

SimilarityIFS ifs_from_json(const json& j) {
    const int d = field<int>(j, "d");
    require(d >= 1 && d <= kMaxDim, "IFS dimension must lie in 1..8");
    std::vector<SimilarityMap> maps;
    for (const auto& mj : field<json>(j, "maps")) {
        SimilarityMap m = SimilarityMap::identity(d);
        m.r = field<double>(mj, "r");
        m.t = vec_from(field<json>(mj, "t"), d, "translation");
        if (mj.contains("rotation")) {
            auto rows = field<std::vector<double>>(mj, "rotation");
            require(static_cast<int>(rows.size()) == d * d, "rotation must have d*d entries");
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) m.O(a, b) = rows[static_cast<std::size_t>(a * d + b)];
        } else if (mj.contains("angle")) {
            require(d == 2, "angle is only meaningful for d = 2");
            double th = field<double>(mj, "angle");
            m.O << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        }
        maps.push_back(m);
    }
    std::optional<OscSet> osc;
    if (j.contains("osc")) {
        const auto& oj = j.at("osc");
        OscSet U;
        const auto kind = field<std::string>(oj, "kind");
        if (kind == "box") {
            U.kind = OscSet::Kind::Box;
            U.lo = vec_from(field<json>(oj, "lo"), d, "osc.lo");
            U.hi = vec_from(field<json>(oj, "hi"), d, "osc.hi");
        } else if (kind == "ball") {
            U.kind = OscSet::Kind::Ball;
            U.center = vec_from(field<json>(oj, "center"), d, "osc.center");
            U.radius = field<double>(oj, "radius");
        } else {
            fail(ErrorKind::InvalidInput, "osc kind must be box or ball");
        }
        osc = U;
    }
    SimilarityIFS ifs(d, std::move(maps), osc);
    if (osc) require(ifs.check_osc(), "the given open set fails the open set condition");
    return ifs;
}

json to_json(const SimilarityIFS& ifs) {
    const int d = ifs.dim();
    json maps = json::array();
    for (const auto& m : ifs.maps()) {
        std::vector<double> rot;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) rot.push_back(m.O(a, b));
        maps.push_back({{"r", m.r}, {"rotation", rot}, {"t", vec_json(m.t)}});
    }
    json j = {{"d", d}, {"maps", maps}};
    if (ifs.osc()) {
        const auto& U = *ifs.osc();
        if (U.kind == OscSet::Kind::Box)
            j["osc"] = {{"kind", "box"}, {"lo", vec_json(U.lo)}, {"hi", vec_json(U.hi)}};
        else
            j["osc"] = {{"kind", "ball"}, {"center", vec_json(U.center)}, {"radius", U.radius}};
    }
    return j;
}

SimilarityIFS load_ifs(const std::string& path) {
    try {
        return ifs_from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::InvalidInput, path + ": " + e.what());
    }
}

json to_json(const Hyperplane& h) { return {{"normal", vec_json(h.u)}, {"offset", h.b}}; }

json to_json(const FixedPointResult& r) {
    json j = {{"s0", r.s0},         {"tau", r.tau},         {"lo", r.lo},   {"hi", r.hi},
              {"iterations", r.iterations}, {"converged", r.converged}, {"method", r.method},
              {"trace", r.trace}};
    if (r.bisection) j["bisection"] = *r.bisection;
    return j;
}

json to_json(const GkaResult& r) {
    return {{"value", r.value},   {"std_error", r.std_error}, {"exact", r.exact},
            {"fell_back", r.fell_back}, {"truncated_mass", r.truncated_mass}, {"note", r.note}};
}

json to_json(const DiffuseCertificate& c) {
    return {{"c_low", c.c_low}, {"c_up", c.c_up}, {"witness", to_json(c.witness)},
            {"tolerance", c.tolerance}, {"certified", c.certified}, {"note", c.note}};
}

json to_json(const DiffuseCheckReport& r) {
    json j = {{"pass", r.pass}, {"worst_ratio", r.worst_ratio}, {"tested", r.tested},
              {"skipped", r.skipped}, {"failures", r.failures}, {"scales", r.scales}};
    if (r.witness_center.size()) {
        j["witness"] = {{"center", vec_json(r.witness_center)}, {"xi", r.witness_xi},
                        {"plane", to_json(r.witness_plane)}};
    }
    return j;
}

json to_json(const FlatBallSearch& r) {
    json j = {{"found", r.found}, {"best_ratio", r.best_ratio}, {"balls", r.balls}};
    if (r.center.size())
        j["witness"] = {{"center", vec_json(r.center)}, {"xi", r.xi}, {"points", r.points_in_ball},
                        {"plane", to_json(r.plane)}};
    return j;
}

json to_json(const BoxDimResult& r) {
    return {{"estimate", r.estimate}, {"intercept", r.intercept}, {"scales", r.scales}, {"counts", r.counts}};
}

json to_json(const AhlforsResult& r) {
    return {{"c1_hat", r.c1_hat}, {"c2_hat", r.c2_hat}, {"spread", r.spread()}, {"samples", r.samples},
            {"radii", r.radii}, {"lower_min", r.lower_min}, {"upper_max", r.upper_max}};
}

json to_json(const AppendixBResult& r) {
    return {{"alpha", r.alpha},
            {"q", r.q},
            {"g_of_q", r.g_of_q},
            {"gap", r.gap},
            {"gap_eps0", r.gap_eps0},
            {"depth1_g", r.depth1_g},
            {"deep_g", r.deep_g},
            {"level", r.level},
            {"q_level", r.q_level},
            {"mc_q", {{"value", r.mc_q.value()}, {"std_error", r.mc_q.std_error()}, {"trials", r.mc_q.trials}}},
            {"mc_g", {{"value", r.mc_g.value()}, {"std_error", r.mc_g.std_error()}, {"trials", r.mc_g.trials}}}};
}

json to_json(const ExtractedSubset& s) {
    return {{"method", s.method},
            {"root", word_to_string(s.root)},
            {"arity", s.arity},
            {"height", s.height},
            {"rho", s.rho},
            {"alpha", s.alpha},
            {"beta", s.beta},
            {"child_constant", s.child_constant},
            {"points", s.cloud.size()},
            {"eps", s.cloud.eps},
            {"xi_window", {s.xi_min, s.xi_max}},
            {"scanned", s.scanned},
            {"evaluations", s.evaluations},
            {"predicted_presence", s.predicted_presence},
            {"notes", s.notes}};
}

PointCloud read_csv(std::istream& in, std::vector<double>* masses) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty cloud CSV");
    auto header = split(line, ',');
    int d = static_cast<int>(header.size());
    bool has_mass = !header.empty() && header.back() == "mass";
    if (has_mass) --d;
    require(d >= 1 && d <= kMaxDim, "cloud CSV needs 1..8 coordinate columns");
    PointCloud cloud;
    cloud.d = d;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split(line, ',');
        require(cells.size() == header.size(), "row " + std::to_string(row) + " has the wrong number of columns");
        for (int k = 0; k < d; ++k) cloud.coords.push_back(to_double(cells[static_cast<std::size_t>(k)], "coordinate"));
        if (has_mass && masses) masses->push_back(to_double(cells.back(), "mass"));
    }
    cloud.extinct = cloud.size() == 0;
    return cloud;
}

void write_cloud_csv(const PointCloud& cloud, const std::vector<double>& masses, std::ostream& out) {
    if (masses.empty()) {
        write_csv(cloud, out);
        return;
    }
    require(masses.size() == cloud.size(), "one mass per point required");
    static const char* names[] = {"x", "y", "z", "w", "x4", "x5", "x6", "x7"};
    for (int k = 0; k < cloud.d; ++k) out << names[k] << ",";
    out << "mass\n";
    char buf[64];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int k = 0; k < cloud.d; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", cloud.point(i)[k]);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", masses[i]);
        out << buf;
    }
}

void write_measure_csv(const std::map<Word, double>& measure, std::ostream& out) {
    out << "word,mass\n";
    char buf[64];
    for (const auto& [w, m] : measure) {
        std::snprintf(buf, sizeof buf, "%.17g", m);
        out << word_to_string(w) << "," << buf << "\n";
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::InvalidInput, "cannot write " + path);
    out << content;
}

}  // namespace gwf
