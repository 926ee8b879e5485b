#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdalab/exchange/exchange.hpp"
#include "cdalab/harness/trial.hpp"

namespace cdalab {

struct HarnessConfig {
  std::uint64_t seed = 1;
  Millis initial_wait_min = kHour;
  Millis initial_wait_max = 2 * kHour;
  /// Pause after the last monitor, uniform on [0, max_gap].
  Millis max_gap = kHour;
  Notional min_trade_size = 50;
  Notional max_trade_size = 500;
  /// Base currency and coin value (at the opening price) each bot starts with.
  Notional base_funding = 200'000;
  Notional coin_funding_value = 200'000;
  /// A bot trades only while it can buy and sell at least this much.
  Notional min_tradeable_value = 500;
  /// Observational mode: every trial is a Control and balances are not checked.
  bool control_only = false;
};

/// Attribute medians over a coin's trials, for the heterogeneity analysis.
struct CoinAttributes {
  std::string coin;
  std::uint64_t observations = 0;
  double price = 0.0;
  double volume = 0.0;
  double spread = 0.0;
  double best_sell_size = 0.0;
  double best_buy_size = 0.0;
};

struct ExperimentSummary {
  std::uint64_t attempts = 0;
  std::uint64_t ineligible_no_trade = 0;
  std::uint64_t ineligible_funds = 0;
  std::uint64_t state_read_failures = 0;
  std::uint64_t failures_to_treat = 0;
  std::uint64_t missing_monitors = 0;
  std::array<std::uint64_t, 3> arm_counts{};
};

struct ExperimentResult {
  std::vector<TrialRecord> trials;
  std::vector<CoinAttributes> coin_attributes;
  ExperimentSummary summary;
};

/// Runs one bot per coin over the exchange until its end time. Trial ids
/// follow (intervention_time, coin) order. Throws std::invalid_argument when
/// treatments are requested from a read-only exchange.
ExperimentResult run_experiment(Exchange& exchange, const HarnessConfig& cfg, unsigned threads = 1);

/// Peer activity in (from, to] from a state read at `to`. One retry on
/// ApiUnavailable, then the record is marked missing.
MonitorRecord record_monitor(Exchange& exchange, CoinId coin, Millis from);

/// Pre-intervention controls from a snapshot covering at least the last hour.
MarketStateControls market_state_controls(const MarketSnapshot& s, OwnerId own);

void write_coin_attributes_csv(std::ostream& out, const std::vector<CoinAttributes>& attrs);
/// Throws ParseError on malformed input.
std::vector<CoinAttributes> read_coin_attributes_csv(std::istream& in, const std::string& source);

}  // namespace cdalab
