#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "gwfract/branching.hpp"
#include "gwfract/extraction.hpp"
#include "gwfract/fixpoint.hpp"
#include "gwfract/geometry.hpp"

namespace gwf {

using nlohmann::json;

struct PercolationSpec {
    int b = 3;
    int d = 2;
    double p = 0.6;
};

// "b=3,d=2,p=0.6" in any order; all three keys required.
PercolationSpec parse_percolation(const std::string& text);

// "bin:N:p", "bern:p0,p1,...", or a JSON object (binomial / bernoulli / table).
OffspringDistribution parse_offspring(const std::string& text);
OffspringDistribution offspring_from_json(const json& j);
json to_json(const OffspringDistribution& w);

// "ary:a", "gen:0-1;2" (generators separated by ';', letters by '-'), or a JSON object.
MonotoneCollection parse_collection(const std::string& text);
MonotoneCollection collection_from_json(const json& j);

// {"d":2,"maps":[{"r":0.5,"angle":0.0,"t":[0,0]}],"osc":{"kind":"box","lo":[0,0],"hi":[1,1]}};
// any d may give "rotation" as a row-major d×d matrix instead of "angle".
SimilarityIFS ifs_from_json(const json& j);
json to_json(const SimilarityIFS& ifs);
SimilarityIFS load_ifs(const std::string& path);

json to_json(const Hyperplane& h);
json to_json(const FixedPointResult& r);
json to_json(const GkaResult& r);
json to_json(const DiffuseCertificate& c);
json to_json(const DiffuseCheckReport& r);
json to_json(const FlatBallSearch& r);
json to_json(const BoxDimResult& r);
json to_json(const AhlforsResult& r);
json to_json(const AppendixBResult& r);
json to_json(const ExtractedSubset& s);

// Cloud CSV with an optional trailing "mass" column.
PointCloud read_csv(std::istream& in, std::vector<double>* masses = nullptr);
void write_cloud_csv(const PointCloud& cloud, const std::vector<double>& masses, std::ostream& out);
void write_measure_csv(const std::map<Word, double>& measure, std::ostream& out);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gwf
