#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "gwfract/parallel.hpp"

namespace gwf {

struct ExperimentPoint {
    std::string label;
    double x = 0.0;
    double estimate = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    std::size_t samples = 0;   // 0 for exact values
    std::string status = "ok";
};

struct ExperimentReport {
    std::string id;
    nlohmann::json parameters;
    std::vector<ExperimentPoint> points;
    std::string verdict = "inconclusive";  // pass | fail | inconclusive
    double runtime_seconds = 0.0;
    nlohmann::json details;
};

// Runtime is left out by default so that reports are byte-identical across runs.
nlohmann::json to_json(const ExperimentReport& r, bool with_runtime = false);
// label,x,estimate,ci_lo,ci_hi,samples,status
std::string points_csv(const ExperimentReport& r);

struct ConvergenceParams {
    int b = 3, d = 2;
    double p = 0.6;
    double c = 2.0;
    double s = 0.5;
    std::size_t k_max = 6;
    std::size_t trials = 20000;   // Monte Carlo fallback only
    double tolerance = 0.05;      // final value must lie within this of the extinction probability
    std::uint64_t seed = 1;
};
ExperimentReport exp_convergence_g_k(const ConvergenceParams& p, Exec exec = Exec::Parallel);

struct LadderParams {
    int b = 3, d = 2;
    double p = 0.7;
    std::vector<double> cs{2.0, 3.0, 4.0};
    std::size_t raw_depth = 6;
    double tolerance = 0.1;
    std::uint64_t seed = 1;
};
ExperimentReport exp_dimension_ladder(const LadderParams& p, Exec exec = Exec::Parallel);

struct NonDiffuseParams {
    int b = 3, d = 2;
    double p = 0.6;
    std::size_t depth = 7;
    std::vector<double> betas{0.01};
    std::size_t balls = 10000;
    double c = 2.0;                // pipeline used for the contrast subset (on the same seed)
    std::size_t samples_per_scale = 100;
    std::uint64_t seed = 1;
};
ExperimentReport exp_non_diffuseness(const NonDiffuseParams& p, Exec exec = Exec::Parallel);

struct AppendixBParams {
    double p = 0.9;
    double eps = 0.01;
    std::size_t trials = 100000;
    std::size_t level = 10;
    std::uint64_t seed = 1;
};
ExperimentReport exp_appendix_b(const AppendixBParams& p, Exec exec = Exec::Parallel);

std::vector<std::string> experiment_ids();

}  // namespace gwf
