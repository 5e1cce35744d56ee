// Serial reference vs OpenMP kernels on synthetic cohorts.

#include <map>

#include <benchmark/benchmark.h>

#include "symco/distance.hpp"
#include "symco/kernels.hpp"
#include "symco/lpca.hpp"
#include "symco/synth.hpp"

namespace {

using namespace symco;

const Cohort& cohort(std::size_t n) {
    static std::map<std::size_t, Cohort> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        auto spec = synth::preset_spec(synth::preset("css"), n, 7);
        it = cache.emplace(n, synth::generate(spec).cohort).first;
    }
    return it->second;
}

kernels::Backend backend_of(const benchmark::State& state) {
    return state.range(1) ? kernels::Backend::parallel : kernels::Backend::serial;
}

void BM_PairCounts(benchmark::State& state) {
    const auto& x = cohort(static_cast<std::size_t>(state.range(0))).matrix();
    const auto backend = backend_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::pair_counts(x, backend));
}

void BM_Majorize(benchmark::State& state) {
    const auto data = kernels::compress_rows(cohort(static_cast<std::size_t>(state.range(0))).matrix());
    const Eigen::MatrixXd theta = 4.0 * data.q;
    Eigen::MatrixXd z;
    const auto backend = backend_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::majorize(data, theta, &z, backend));
}

void BM_WeightedCrossprod(benchmark::State& state) {
    const auto data = kernels::compress_rows(cohort(static_cast<std::size_t>(state.range(0))).matrix());
    const auto backend = backend_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_crossprod(data.q, data.count, data.x, backend));
}

void BM_LpcaFit(benchmark::State& state) {
    const auto& x = cohort(static_cast<std::size_t>(state.range(0))).matrix();
    lpca::FitOptions opts;
    opts.backend = backend_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(lpca::fit(x, 2, 4.0, opts));
}

void sizes(benchmark::internal::Benchmark* b) {
    for (long n : {2000L, 20000L}) {
        for (long parallel : {0L, 1L}) b->Args({n, parallel});
    }
    b->ArgNames({"n", "omp"});
}

}  // namespace

BENCHMARK(BM_PairCounts)->Apply(sizes);
BENCHMARK(BM_Majorize)->Apply(sizes);
BENCHMARK(BM_WeightedCrossprod)->Apply(sizes);
BENCHMARK(BM_LpcaFit)->Apply(sizes)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
