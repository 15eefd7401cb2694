#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "gsum/coupling1d.hpp"
#include "gsum/geometry.hpp"
#include "gsum/highdim.hpp"
#include "gsum/ito.hpp"
#include "gsum/orderstats.hpp"

using namespace gsum;

static void BM_Normal(benchmark::State& state) {
  RandomSource r(1);
  for (auto _ : state) benchmark::DoNotOptimize(r.normal());
}
BENCHMARK(BM_Normal);

static void BM_BuildCoupling(benchmark::State& state) {
  const std::vector<double> pts{-0.05, 0.0, 0.05};
  const auto s = DiscreteDistribution1D::uniform(pts);
  for (auto _ : state) benchmark::DoNotOptimize(build_density_coupling(s).y0());
}
BENCHMARK(BM_BuildCoupling)->Unit(benchmark::kMillisecond);

static void BM_CoupledPair(benchmark::State& state) {
  const std::vector<double> pts{-0.05, 0.05};
  const auto c = build_density_coupling(DiscreteDistribution1D::uniform(pts));
  RandomSource r(2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_coupled_pair(c, r).g);
}
BENCHMARK(BM_CoupledPair);

static void BM_ItoPath(benchmark::State& state) {
  ItoConfig cfg;
  cfg.steps = static_cast<std::size_t>(state.range(0));
  const ItoDecomposer d(TransportMap1D::tabulate([](double x) { return std::tanh(x); }, -9.0, 9.0, 9217), cfg);
  const std::size_t paths = 1024;
  for (auto _ : state) benchmark::DoNotOptimize(d.sample_many(RandomSource(3), paths).back().x);
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<std::int64_t>(paths));
}
BENCHMARK(BM_ItoPath)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_EllipsoidGame(benchmark::State& state) {
  RandomSource r(4);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < state.range(0); ++i) {
    Eigen::VectorXd x(3);
    for (auto& c : x) c = r.normal();
    pts.push_back(x);
    pts.push_back(-x);
  }
  const SymmetricPointSet s(pts);
  for (auto _ : state) benchmark::DoNotOptimize(ellipsoid_game(s, 1.0).gap);
}
BENCHMARK(BM_EllipsoidGame)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_ExhaustivePartition(benchmark::State& state) {
  RandomSource r(5);
  std::vector<Eigen::VectorXd> v;
  for (int i = 0; i < 12; ++i) {
    Eigen::VectorXd x(2);
    for (auto& c : x) c = r.normal();
    v.push_back(0.5 * x / x.norm());
  }
  for (auto _ : state) benchmark::DoNotOptimize(mss_partition(v, 3).per_part_norm);
}
BENCHMARK(BM_ExhaustivePartition)->Unit(benchmark::kMillisecond);

static void BM_OrderStats(benchmark::State& state) {
  const auto fam = ThetaFamily::all_gaussian(static_cast<std::size_t>(state.range(0)));
  OrderStatsOptions opt;
  opt.reps = 100;
  for (auto _ : state) benchmark::DoNotOptimize(orderstats_moment_sum(fam, RandomSource(6), opt).moment_sum);
}
BENCHMARK(BM_OrderStats)->Arg(128)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
