#pragma once

#include <string>
#include <vector>

#include "cdalab/agents/agent.hpp"
#include "cdalab/config_file.hpp"
#include "cdalab/market/types.hpp"

namespace cdalab {

struct AgentSpec {
  std::string label;
  AgentConfig config;
  /// Agents of this spec per coin; saliency traders are market-wide, so for
  /// them this is the total count.
  std::uint32_t count = 1;
};

struct SimConfig {
  std::uint32_t coins = 217;
  /// 2014-10-01T00:00:00Z
  Millis start_time = 1'412'121'600'000;
  Millis duration = 7 * kDay;
  std::uint64_t seed = 1;
  std::vector<AgentSpec> agents;

  Notional min_order_size = 10;
  double fee_rate = 0.0;

  /// Per-coin activity multipliers are log-normal with mean 1.
  double activity_sigma = 1.0;
  double price_median = 50.0;
  double price_sigma = 0.7;

  /// Liquidity placed on each side of every book at start.
  std::uint32_t initial_levels = 5;
  Notional initial_level_value = 20'000;
  Millis initial_order_ttl = 2 * kHour;

  /// How often expired resting orders are swept from each book.
  Millis sweep_interval = 5 * kMinute;

  /// Keep submit/expire order events for the event log.
  bool record_orders = false;

  [[nodiscard]] Millis end_time() const { return start_time + duration; }
};

/// Throws std::invalid_argument on a violated invariant.
void validate(const SimConfig& cfg);

/// Consumes the simulation keys of `file` (see configs/ for the schema).
/// Throws ParseError naming the key and line of a bad value.
SimConfig read_sim_config(ConfigFile& file);

/// Inverse of read_sim_config, keys in a fixed order.
std::string write_sim_config(const SimConfig& cfg);

}  // namespace cdalab
