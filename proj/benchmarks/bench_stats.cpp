#include <benchmark/benchmark.h>

#include "cdalab/exchange/exchange.hpp"
#include "cdalab/harness/harness.hpp"
#include "cdalab/sim/engine.hpp"
#include "cdalab/stats/bootstrap.hpp"
#include "cdalab/stats/effects.hpp"
#include "cdalab/stats/regression.hpp"

using namespace cdalab;

namespace {

// About 20k trials from a 100-coin, two-week ZI market.
const std::vector<TrialRecord>& trial_log() {
  static const std::vector<TrialRecord> log = [] {
    SimConfig cfg;
    cfg.coins = 100;
    cfg.duration = 14 * kDay;
    AgentSpec zi;
    zi.label = "zi";
    zi.config.arrival_rate = 10.0;
    zi.config.initial_holdings_value = 100'000'000;
    cfg.agents = {zi};
    Simulation sim(cfg);
    SimExchange ex(sim);
    return run_experiment(ex, HarnessConfig{}).trials;
  }();
  return log;
}

void BM_EffectTable(benchmark::State& state) {
  const DvSet set = extract_dvs(trial_log());
  for (auto _ : state) benchmark::DoNotOptimize(build_effect_table(set));
  state.counters["trials"] = static_cast<double>(trial_log().size());
}
BENCHMARK(BM_EffectTable)->Unit(benchmark::kMillisecond);

void BM_FixedEffectsRegression(benchmark::State& state) {
  const DvSet set = extract_dvs(trial_log());
  for (auto _ : state) benchmark::DoNotOptimize(fe_regression(set, Dv::BuyProb));
}
BENCHMARK(BM_FixedEffectsRegression)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
  BootstrapOptions o;
  o.replicates = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_effects(trial_log(), o));
}
BENCHMARK(BM_Bootstrap)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
