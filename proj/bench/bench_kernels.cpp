// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to vary the
// worker count; results are identical by construction (see unit tests).

#include <benchmark/benchmark.h>

#include "rclust/evaluation.hpp"
#include "rclust/kernels.hpp"
#include "rclust/random.hpp"

using namespace rclust;
using kernels::Backend;

namespace {

FeatureStream random_stream(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(rows * dim);
  for (auto& x : v) x = rng.normal();
  return FeatureStream(rows, dim, std::move(v));
}

template <Backend B>
void BM_DistanceMatrix(benchmark::State& state) {
  auto x = random_stream(static_cast<std::size_t>(state.range(0)), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::distance_matrix(x, kernels::Metric::Cosine, B));
  state.SetComplexityN(state.range(0));
}

template <Backend B>
void BM_SplitScan(benchmark::State& state) {
  // A window with no change: every split is evaluated.
  const auto len = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 16;
  auto x = random_stream(len, dim, 2);
  std::vector<double> prefix((len + 1) * dim, 0.0);
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      prefix[(i + 1) * dim + j] = prefix[i * dim + j] + 0.01 * x.at(i, j);
  kernels::SplitScan scan{prefix.data(), dim, len, 2, 0.05, 5};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::first_firing_split(scan, B));
  state.SetComplexityN(state.range(0));
}

template <Backend B>
void BM_MeanShift(benchmark::State& state) {
  SynthSpec spec;
  spec.num_segments = static_cast<std::size_t>(state.range(0));
  auto d = generate_synthetic(spec);
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::meanshift_modes(d.stream, 1.0, 1e-5, 200, B));
}

}  // namespace

BENCHMARK(BM_DistanceMatrix<Backend::Serial>)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistanceMatrix<Backend::OpenMP>)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SplitScan<Backend::Serial>)->RangeMultiplier(4)->Range(1024, 65536)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SplitScan<Backend::OpenMP>)->RangeMultiplier(4)->Range(1024, 65536)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MeanShift<Backend::Serial>)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeanShift<Backend::OpenMP>)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
