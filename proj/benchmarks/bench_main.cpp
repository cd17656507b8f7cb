// Micro-benchmarks for the hot paths behind initialization and steering.

#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "parcelsteer/hierarchy.hpp"
#include "parcelsteer/linkage.hpp"
#include "parcelsteer/signal_metrics.hpp"
#include "parcelsteer/slice_renderer.hpp"
#include "parcelsteer/supervoxel.hpp"
#include "parcelsteer/synth.hpp"

using namespace parcelsteer;

namespace {

std::vector<TimeCourse> random_courses(std::size_t n, std::size_t nt, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<TimeCourse> out(n);
    for (auto& tc : out) {
        tc.samples.resize(nt);
        for (auto& v : tc.samples) v = normal(rng);
    }
    return out;
}

void BM_Pearson(benchmark::State& state) {
    const auto tcs = random_courses(2, static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(pearson_r(tcs[0].samples, tcs[1].samples));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pearson)->Arg(100)->Arg(1200);

void BM_CorrelationMatrix(benchmark::State& state) {
    const auto tcs = random_courses(static_cast<std::size_t>(state.range(0)), 1200, 2);
    for (auto _ : state) benchmark::DoNotOptimize(correlation_matrix(tcs));
}
BENCHMARK(BM_CorrelationMatrix)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_CompleteLinkage(benchmark::State& state) {
    const auto tcs = random_courses(static_cast<std::size_t>(state.range(0)), 200, 3);
    const auto d = distance_matrix(tcs);
    for (auto _ : state) benchmark::DoNotOptimize(complete_linkage(d));
}
BENCHMARK(BM_CompleteLinkage)->Arg(40)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

std::shared_ptr<const SupervoxelSet> full_scale_supervoxels() {
    static const auto svs = [] {
        SynthSpec spec;
        spec.dims = {32, 32, 24};
        spec.n_networks = 10;
        spec.clusters_per_network = 8;
        spec.supervoxels_per_cluster = 5;
        spec.timepoints = 1200;
        spec.noise_sd = 3.0;
        spec.between_r = 0.1;
        const auto ds = generate_synth(spec);
        return std::make_shared<const SupervoxelSet>(extract_supervoxels(ds.scan, ds.atlas, ds.meta));
    }();
    return svs;
}

void BM_HierarchyInit(benchmark::State& state) {
    const auto svs = full_scale_supervoxels();
    for (auto _ : state) benchmark::DoNotOptimize(Hierarchy::build(svs, 0.6));
}
BENCHMARK(BM_HierarchyInit)->Unit(benchmark::kMicrosecond);

void BM_ParcellationFC(benchmark::State& state) {
    const auto h = Hierarchy::build(full_scale_supervoxels(), state.range(0) / 100.0);
    for (auto _ : state) benchmark::DoNotOptimize(parcellation_fc(h));
    state.counters["leaves"] = static_cast<double>(h.leaf_count());
}
BENCHMARK(BM_ParcellationFC)->Arg(0)->Arg(60)->Unit(benchmark::kMicrosecond);

void BM_TraceContours(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    std::mt19937_64 rng(4);
    LabelImage img{side, side, std::vector<std::int32_t>(static_cast<std::size_t>(side * side))};
    // Blocky labels, the shape atlas slices usually have.
    for (int v = 0; v < side; ++v)
        for (int u = 0; u < side; ++u) img.labels[static_cast<std::size_t>(v * side + u)] = (u / 6) * 7 + v / 5 + 1;
    for (auto& l : img.labels)
        if (rng() % 10 == 0) l = 0;
    for (auto _ : state) benchmark::DoNotOptimize(trace_contours(img));
}
BENCHMARK(BM_TraceContours)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

} // namespace
BENCHMARK_MAIN();
