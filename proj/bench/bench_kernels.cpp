#include <benchmark/benchmark.h>

#include "gwfract/fixpoint.hpp"
#include "gwfract/geometry.hpp"

using namespace gwf;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::Parallel : Exec::Serial; }

const PointCloud& sample_cloud() {
    static const PointCloud cloud = [] {
        auto w = OffspringDistribution::binomial(9, 0.7);
        return render(percolation_ifs(3, 2), sample_gw(w, 6, 11).tree);
    }();
    return cloud;
}

void BM_ExtinctionFrequency(benchmark::State& state) {
    auto w = OffspringDistribution::binomial(9, 0.6);
    for (auto _ : state) benchmark::DoNotOptimize(extinction_frequency(w, 30, 5000, 1, exec_of(state)).hits);
}

void BM_GMonteCarlo(benchmark::State& state) {
    auto w = OffspringDistribution::binomial(9, 0.6);
    auto gen = MonotoneCollection::generators({{0, 1}, {4, 5, 6}});
    for (auto _ : state)
        benchmark::DoNotOptimize(g_eval({&w, &gen, GStrategy::MonteCarlo, 50000, 1}, 0.3, exec_of(state)).value);
}

void BM_EmpiricalDiffuse(benchmark::State& state) {
    const auto& c = sample_cloud();
    auto scales = geometric_ladder(0.02, 0.2, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(empirical_diffuse_check(c, 0.01, scales, 200, 1, exec_of(state)).worst_ratio);
}

void BM_FlatBallSearch(benchmark::State& state) {
    const auto& c = sample_cloud();
    auto scales = geometric_ladder(0.02, 0.2, 3);
    for (auto _ : state) benchmark::DoNotOptimize(search_flat_ball(c, 0.01, scales, 1000, 1, exec_of(state)).best_ratio);
}

void BM_BoxDimension(benchmark::State& state) {
    const auto& c = sample_cloud();
    for (auto _ : state) benchmark::DoNotOptimize(box_dimension(c, 10, exec_of(state)).estimate);
}

void BM_DiffusenessConstant(benchmark::State& state) {
    auto ifs = sierpinski_ifs();
    auto F = render_full(ifs, 5);
    DiffuseOptions o;
    o.exec = exec_of(state);
    o.tol = 1e-5;
    for (auto _ : state) benchmark::DoNotOptimize(diffuseness_constant(ifs.maps(), F, o).c_low);
}

}  // namespace

// Argument 0 runs the serial reference, 1 the OpenMP kernel.
BENCHMARK(BM_ExtinctionFrequency)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GMonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmpiricalDiffuse)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FlatBallSearch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BoxDimension)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DiffusenessConstant)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
