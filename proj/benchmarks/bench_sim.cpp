#include <benchmark/benchmark.h>

#include "cdalab/exchange/exchange.hpp"
#include "cdalab/harness/harness.hpp"
#include "cdalab/sim/engine.hpp"

using namespace cdalab;

namespace {

SimConfig market(std::uint32_t coins, double hours) {
  SimConfig cfg;
  cfg.coins = coins;
  cfg.duration = static_cast<Millis>(hours * kHour);
  cfg.activity_sigma = 0.5;
  AgentSpec taker;
  taker.label = "taker";
  taker.config.arrival_rate = 2.9;
  taker.config.initial_holdings_value = 100'000'000;
  taker.config.zi.taker_prob = 1.0;
  taker.config.zi.buy_propensity = 0.25;
  AgentSpec maker;
  maker.label = "maker";
  maker.config.arrival_rate = 8.0;
  maker.config.initial_holdings_value = 100'000'000;
  maker.config.zi.taker_prob = 0.0;
  maker.config.zi.buy_propensity = 0.6;
  AgentSpec copier;
  copier.label = "copier";
  copier.config.kind = AgentKind::CopyTrader;
  copier.config.arrival_rate = 12.0;
  copier.config.theta = 0.013;
  copier.config.zi.activity = 0.0;
  cfg.agents = {taker, maker, copier};
  return cfg;
}

// Simulated coin-hours per second, market only.
void BM_Simulate(benchmark::State& state) {
  const auto coins = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    Simulation sim(market(coins, 168));
    sim.run();
    benchmark::DoNotOptimize(sim.book(0).tape().size());
  }
  state.counters["coin_hours"] = benchmark::Counter(static_cast<double>(state.iterations()) * coins * 168,
                                                    benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

// The full protocol: market plus one harness bot per coin.
void BM_Experiment(benchmark::State& state) {
  const auto coins = static_cast<std::uint32_t>(state.range(0));
  std::size_t trials = 0;
  for (auto _ : state) {
    Simulation sim(market(coins, 168));
    SimExchange ex(sim);
    HarnessConfig h;
    trials += run_experiment(ex, h).trials.size();
  }
  state.counters["trials"] = benchmark::Counter(static_cast<double>(trials), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Experiment)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
