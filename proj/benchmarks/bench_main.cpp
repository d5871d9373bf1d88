#include <benchmark/benchmark.h>

#include "heavytail/cluster.hpp"
#include "heavytail/distributions.hpp"
#include "heavytail/limits.hpp"
#include "heavytail/models.hpp"
#include "heavytail/regen.hpp"
#include "heavytail/rng_stream.hpp"

using namespace heavytail;
using randkit::RngStream;
using randkit::TailLaw;

namespace {

models::ModelSpec ar1(double a, const TailLaw& law) {
  models::Var1Spec s;
  s.a = Eigen::MatrixXd::Constant(1, 1, a);
  s.innovation.law = law;
  return s;
}

void BM_Uniform(benchmark::State& state) {
  RngStream s(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(s.uniform());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Uniform);

void BM_StableDraw(benchmark::State& state) {
  RngStream s(1, 1);
  const double alpha = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(randkit::stable_draw(s, alpha, 0.3));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StableDraw)->Arg(5)->Arg(10)->Arg(15);

void BM_SimulatePath(benchmark::State& state) {
  const auto spec = ar1(0.5, TailLaw::symmetric_pareto(1.5));
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(models::simulate_path(spec, n, 0, RngStream(2, 0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePath)->Arg(10'000)->Arg(1'000'000);

void BM_SimulateSumGarch(benchmark::State& state) {
  models::Garch11Spec g;
  RngStream s(3, 0);
  for (auto _ : state) benchmark::DoNotOptimize(models::simulate_sum(g, 10'000, 0, s));
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_SimulateSumGarch);

void BM_ClusterIndexTailProcess(benchmark::State& state) {
  const auto spec = ar1(0.5, TailLaw::pareto(1.5));
  models::TailProcessSampler sampler(spec, RngStream(4, 0));
  const auto fn = sampler.as_function();
  const auto theta = cluster::Direction::scalar(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cluster::cluster_index_tail_process(fn, theta, 1.5, 40, 10'000, RngStream(4, 1)));
  }
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_ClusterIndexTailProcess)->Unit(benchmark::kMillisecond);

void BM_TailIndexGarch(benchmark::State& state) {
  models::Garch11Spec g;
  g.alpha1 = 0.1;
  g.beta1 = 0.85;
  for (auto _ : state) benchmark::DoNotOptimize(models::tail_index(g));
}
BENCHMARK(BM_TailIndexGarch)->Unit(benchmark::kMicrosecond);

void BM_SplitStep(benchmark::State& state) {
  const auto m = regen::Minorization::for_model(ar1(0.5, TailLaw::symmetric_pareto(1.5)), 2.0);
  RngStream s(5, 0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  for (auto _ : state) {
    x = regen::split_step(x, m, s).next;
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SplitStep);

void BM_HarvestBlocks(benchmark::State& state) {
  const auto m = regen::Minorization::for_model(ar1(0.5, TailLaw::gaussian()), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(regen::harvest_blocks(m, 100'000, RngStream(6, 0)));
  state.SetItemsProcessed(state.iterations() * 100'000);
}
BENCHMARK(BM_HarvestBlocks)->Unit(benchmark::kMillisecond);

void BM_StableCf(benchmark::State& state) {
  double x = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(limits::stable_cf(1.5, 1.2, 0.4, x));
    x += 1e-6;
  }
}
BENCHMARK(BM_StableCf);

}  // namespace
BENCHMARK_MAIN();
