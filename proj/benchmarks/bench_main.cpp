#include <benchmark/benchmark.h>

#include "teimit/error.hpp"
#include "teimit/gnn.hpp"
#include "teimit/ipm.hpp"
#include "teimit/netmodel.hpp"
#include "teimit/rng.hpp"
#include "teimit/train.hpp"

namespace {

teimit::TEInstance instance(int nodes, int pairs) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    try {
      const auto topo = teimit::generate_erdos_renyi(nodes, 0.3, teimit::derive_seed(7, attempt, 1));
      return teimit::sample_instance(topo, pairs, {1000, 5000}, 4, teimit::derive_seed(7, attempt, 2));
    } catch (const teimit::GenerationError&) {
    }
  }
}

teimit::ModelConfig desk_model() {
  teimit::ModelConfig c;
  c.hidden_dim = 64;
  c.enc_hidden = 32;
  c.readout_hidden1 = 64;
  c.readout_hidden2 = 128;
  return c;
}

void BM_IpmSolve(benchmark::State& state) {
  const auto lp = teimit::build_lp(instance(static_cast<int>(state.range(0)), 10));
  for (auto _ : state) benchmark::DoNotOptimize(teimit::solve(lp));
  state.counters["paths"] = static_cast<double>(lp.num_cols());
}
BENCHMARK(BM_IpmSolve)->Arg(20)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_ModelPredict(benchmark::State& state) {
  const auto lp = teimit::build_lp(instance(static_cast<int>(state.range(0)), 10));
  const auto ops = teimit::prepare(teimit::encode(teimit::normalize(lp)));
  const auto params = teimit::init_parameters(desk_model(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(teimit::predict(*ops, params, 8));
  state.counters["paths"] = static_cast<double>(lp.num_cols());
}
BENCHMARK(BM_ModelPredict)->Arg(20)->Arg(60)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_SampleLossGradient(benchmark::State& state) {
  const auto lp = teimit::build_lp(instance(25, 10));
  const auto sample = teimit::make_sample("b", lp, teimit::solve(lp));
  const auto params = teimit::init_parameters(desk_model(), 1);
  teimit::Vector grad;
  for (auto _ : state) benchmark::DoNotOptimize(teimit::sample_loss(sample, params, {}, &grad));
}
BENCHMARK(BM_SampleLossGradient)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
