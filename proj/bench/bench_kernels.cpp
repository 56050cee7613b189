#include <benchmark/benchmark.h>

#include <random>

#include "mirrorflow/kernels.hpp"
#include "mirrorflow/potential.hpp"
#include "mirrorflow/reparam.hpp"

using namespace mirrorflow;

namespace {

struct LsqData {
  Matrix x;
  Vector y;
  Vector w;
};

LsqData make_lsq(Index n, Index d) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal;
  LsqData data{Matrix(n, d), Vector(n), Vector(d)};
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) data.x(i, j) = normal(rng);
    data.y[i] = normal(rng);
  }
  for (Index j = 0; j < d; ++j) data.w[j] = normal(rng);
  return data;
}

void BM_LsqGradientSerial(benchmark::State& state) {
  const auto data = make_lsq(state.range(0), 4 * state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::lsq_gradient_serial(data.x, data.y, data.w));
}

void BM_LsqGradientParallel(benchmark::State& state) {
  const auto data = make_lsq(state.range(0), 4 * state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::lsq_gradient_parallel(data.x, data.y, data.w));
  }
}

struct ConditionData {
  Triple triple = make_triple("tempered_as_gd:0.5");
  std::vector<Vector> samples;
};

ConditionData make_condition(Index count) {
  ConditionData data;
  data.samples = sample_condition_points(data.triple, 10, static_cast<int>(count), 7);
  return data;
}

void BM_ConditionSerial(benchmark::State& state) {
  const auto data = make_condition(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::max_over_samples_serial(
        static_cast<Index>(data.samples.size()), [&](Index i) {
          return condition_residual(data.triple.direct, data.triple.reparam, data.triple.q,
                                    data.samples[static_cast<std::size_t>(i)]);
        }));
  }
}

void BM_ConditionParallel(benchmark::State& state) {
  const auto data = make_condition(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::max_over_samples_parallel(
        static_cast<Index>(data.samples.size()), [&](Index i) {
          return condition_residual(data.triple.direct, data.triple.reparam, data.triple.q,
                                    data.samples[static_cast<std::size_t>(i)]);
        }));
  }
}

}  // namespace

BENCHMARK(BM_LsqGradientSerial)->Arg(10)->Arg(100)->Arg(500);
BENCHMARK(BM_LsqGradientParallel)->Arg(10)->Arg(100)->Arg(500);
BENCHMARK(BM_ConditionSerial)->Arg(100)->Arg(10000);
BENCHMARK(BM_ConditionParallel)->Arg(100)->Arg(10000);

BENCHMARK_MAIN();
