#include <random>

#include <benchmark/benchmark.h>

#include "ifa/ifa.hpp"

namespace {

using namespace ifa;

Simulation make_panel(int n, int j, int k, ModelKind kind = ModelKind::binary) {
  SimSpec spec;
  spec.n = n;
  spec.j = j;
  spec.k = k;
  spec.kind = kind;
  spec.seed = 1;
  return simulate(spec);
}

void BM_CategoryProbabilities(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  SimSpec spec;
  spec.n = 1;
  spec.j = 1;
  spec.kind = kind;
  const ItemParams item = simulate(spec).items.front();
  double s = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(category_probabilities(item, s, Link::logit));
    s = s > 3.0 ? -3.0 : s + 1e-3;
  }
}
BENCHMARK(BM_CategoryProbabilities)
    ->Arg(static_cast<int>(ModelKind::binary))
    ->Arg(static_cast<int>(ModelKind::graded))
    ->Arg(static_cast<int>(ModelKind::gpc));

void BM_ScoreTerms(benchmark::State& state) {
  const Link link = state.range(0) == 0 ? Link::logit : Link::probit;
  SimSpec spec;
  spec.n = 1;
  spec.j = 1;
  spec.kind = ModelKind::graded;
  const ItemParams item = simulate(spec).items.front();
  double s = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_terms(item, 2, s, link));
    s = s > 3.0 ? -3.0 : s + 1e-3;
  }
}
BENCHMARK(BM_ScoreTerms)->Arg(0)->Arg(1);

void BM_PersonBlock(benchmark::State& state) {
  const Simulation sim = make_panel(static_cast<int>(state.range(0)), 100, 3);
  CjmleConfig config;
  config.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_person_block(sim.data, sim.items, sim.thetas, Link::logit, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 100);
}
BENCHMARK(BM_PersonBlock)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_ItemBlock(benchmark::State& state) {
  const Simulation sim = make_panel(static_cast<int>(state.range(0)), 100, 3);
  CjmleConfig config;
  config.workers = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(update_item_block(sim.data, sim.thetas, sim.items, Link::logit, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 100);
}
BENCHMARK(BM_ItemBlock)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_SpectralBinary(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const Simulation sim = make_panel(n, n / 20, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fit_svd_binary(sim.data, 3, Link::logit));
}
BENCHMARK(BM_SpectralBinary)->Arg(2000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_GibbsSweep(benchmark::State& state) {
  const Simulation sim = make_panel(1, 100, 3, ModelKind::graded);
  const PosteriorSampler sampler(sim.items, Link::probit, FactorConfig(3));
  ChainState chain = make_chain(1, 0, Eigen::VectorXd::Zero(3), 100);
  const Eigen::VectorXi row = sim.data.responses().row(0).transpose();
  for (auto _ : state) {
    sampler.gibbs_sweep(row, chain);
    benchmark::DoNotOptimize(chain.theta.data());
  }
}
BENCHMARK(BM_GibbsSweep);

void BM_MetropolisStep(benchmark::State& state) {
  const Simulation sim = make_panel(1, 100, 3);
  const PosteriorSampler sampler(sim.items, Link::logit, FactorConfig(3));
  ChainState chain = make_chain(1, 0, Eigen::VectorXd::Zero(3), 100);
  const Eigen::VectorXi row = sim.data.responses().row(0).transpose();
  const MhConfig mh{0.5, false, 0.234};
  for (auto _ : state) benchmark::DoNotOptimize(sampler.mh_step(row, chain, mh));
}
BENCHMARK(BM_MetropolisStep);

void BM_TruncatedNormalTail(benchmark::State& state) {
  Rng rng = make_stream(1, 0);
  const double mean = -static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_truncated_normal(mean, true, rng));
}
BENCHMARK(BM_TruncatedNormalTail)->Arg(0)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
