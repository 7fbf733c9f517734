// Serial reference kernels vs their OpenMP versions.
//
//   ./bench_kernels --benchmark_filter=Matheron
//   OMP_NUM_THREADS=8 ./bench_kernels

#include <benchmark/benchmark.h>

#include <omp.h>

#include "egovario/bootstrap.hpp"
#include "egovario/kernels.hpp"
#include "egovario/simfield.hpp"

using namespace egovario;
namespace k = egovario::kernels;

namespace {

std::vector<double> noise(std::size_t n) {
    std::vector<double> z(n);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (auto& v : z) v = g(rng);
    return z;
}

template <bool Parallel>
void BM_Distances(benchmark::State& state) {
    const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 10000.0, 1);
    std::vector<double> out(k::pair_count(pts.size()));
    for (auto _ : state) {
        if constexpr (Parallel)
            k::pairwise_distances_parallel(pts, out);
        else
            k::pairwise_distances_serial(pts, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

template <bool Parallel>
void BM_Matheron(benchmark::State& state) {
    const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 10000.0, 2);
    const auto z = noise(pts.size());
    for (auto _ : state) {
        auto sums = Parallel ? k::matheron_sums_parallel(pts, z, 2000.0, 13) : k::matheron_sums_serial(pts, z, 2000.0, 13);
        benchmark::DoNotOptimize(sums.count.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(k::pair_count(pts.size())));
}

template <bool Parallel>
void BM_Covariance(benchmark::State& state) {
    const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 10000.0, 3);
    const ExpParams p{0.5, 0.5, 300.0};
    for (auto _ : state) {
        auto c = Parallel ? k::covariance_matrix_parallel(pts, p) : k::covariance_matrix_serial(pts, p);
        benchmark::DoNotOptimize(c.data());
    }
}

template <bool Parallel>
void BM_PairHistogram(benchmark::State& state) {
    const auto pts = uniform_points(static_cast<std::size_t>(state.range(0)), 10000.0, 4);
    for (auto _ : state) {
        auto h = Parallel ? k::pair_histogram_parallel(pts, 15000.0, 1 << 16)
                          : k::pair_histogram_serial(pts, 15000.0, 1 << 16);
        benchmark::DoNotOptimize(h.counts.data());
    }
}

// 64 accepted bootstrap replicates on a 900-point field, one worker vs all.
template <bool Parallel>
void BM_Bootstrap(benchmark::State& state) {
    const auto coords = uniform_points(900, 5000.0, 6);
    const auto z = simulate_field({{1.0, 4.0, 300.0}, coords, 7});
    const auto ds = make_dataset(coords, z);
    const auto model = fit_exponential(empirical_variogram(ds, 1000.0, 13));
    const BootstrapSetup setup(ds, model);
    BootstrapConfig cfg;
    cfg.B = 64;
    cfg.seed = 1;
    cfg.workers = Parallel ? 0 : 1;
    for (auto _ : state) {
        auto t = par_uncertainty(setup, model, cfg);
        benchmark::DoNotOptimize(t.rows.data());
    }
    state.counters["threads"] = Parallel ? omp_get_max_threads() : 1;
}

}  // namespace

BENCHMARK(BM_Distances<false>)->Name("Distances/serial")->Arg(1000)->Arg(4000);
BENCHMARK(BM_Distances<true>)->Name("Distances/parallel")->Arg(1000)->Arg(4000);
BENCHMARK(BM_Matheron<false>)->Name("Matheron/serial")->Arg(1000)->Arg(4000);
BENCHMARK(BM_Matheron<true>)->Name("Matheron/parallel")->Arg(1000)->Arg(4000);
BENCHMARK(BM_Covariance<false>)->Name("Covariance/serial")->Arg(900)->Arg(2000);
BENCHMARK(BM_Covariance<true>)->Name("Covariance/parallel")->Arg(900)->Arg(2000);
BENCHMARK(BM_PairHistogram<false>)->Name("PairHistogram/serial")->Arg(4000);
BENCHMARK(BM_PairHistogram<true>)->Name("PairHistogram/parallel")->Arg(4000);
BENCHMARK(BM_Bootstrap<false>)->Name("Bootstrap/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap<true>)->Name("Bootstrap/parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
