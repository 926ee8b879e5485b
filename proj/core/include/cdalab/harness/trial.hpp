#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdalab/market/types.hpp"

namespace cdalab {

enum class Condition : std::uint8_t { Buy, Sell, Control };

std::string_view to_string(Condition c);
/// Accepts "buy", "sell", "control". Throws std::invalid_argument.
Condition parse_condition(std::string_view s);

/// Position of a best quote relative to the last traded price.
enum class QuoteVsLast : std::uint8_t { Above, Below, At };

/// Pre-intervention market state used as regression controls.
struct MarketStateControls {
  /// An empty bid side counts as Below and an empty ask side as Above.
  QuoteVsLast best_buy = QuoteVsLast::At;
  QuoteVsLast best_sell = QuoteVsLast::At;
  bool last_trade_was_buy = false;
  /// Buy-initiated share of the previous hour's peer volume, in [0, 1].
  double pct_buy_volume_prev_hour = 0.0;
  /// ln(previous-hour volume / the coin's average hourly volume); absent when undefined.
  std::optional<double> log_relative_volume;
  Notional prev_hour_volume = 0;

  friend bool operator==(const MarketStateControls&, const MarketStateControls&) = default;
};

inline constexpr std::array<Millis, 4> kMonitorBounds = {0, 15 * kMinute, 30 * kMinute, 60 * kMinute};

/// Peer activity in one monitor window, bot trades excluded. `missing` marks
/// a read that failed twice; every other field is then meaningless.
struct MonitorRecord {
  bool missing = false;
  bool any_trade = false;
  std::optional<Side> last_trade_side;
  Notional buy_volume = 0;
  Notional sell_volume = 0;
  std::uint32_t trade_count = 0;

  friend bool operator==(const MonitorRecord&, const MonitorRecord&) = default;
};

struct TrialRecord {
  std::uint64_t trial_id = 0;
  std::string coin;
  Condition condition = Condition::Control;
  /// False for Control and for treatments the exchange failed to execute.
  bool intervened = false;
  /// Intervention value in base units; 0 for Control.
  Notional trade_size = 0;
  Millis intervention_time = 0;
  MarketStateControls pre_state;
  std::array<MonitorRecord, 3> monitors{};
  /// Set by simulate_failure_to_treat; never written to the log.
  bool pseudo_failure = false;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Trials counted as treated in the primary analysis: executed treatments,
/// and Control trials not flagged as pseudo-failures.
[[nodiscard]] bool analysed(const TrialRecord& t);

/// Throws std::invalid_argument when a record violates the log invariants.
void validate(const TrialRecord& t);

// Trial log: a header line, then one comma-separated line per trial with
// trial_id, coin, condition, intervened, trade_size, intervention_time, ten
// pre-state fields and five fields per monitor. Missing values are empty.
extern const std::string_view kTrialLogHeader;

std::string format_trial_line(const TrialRecord& t);
void write_trial_log(std::ostream& out, const std::vector<TrialRecord>& trials);
/// Throws ParseError with the offending line number.
std::vector<TrialRecord> read_trial_log(std::istream& in, const std::string& source);
std::vector<TrialRecord> load_trial_log(const std::string& path);

enum class Half : std::uint8_t { Exploratory, Confirmatory };

/// Independent fair coin per trial keyed by (seed, trial_id).
std::vector<Half> split_assignment(const std::vector<TrialRecord>& trials, std::uint64_t seed);
struct SplitDataset {
  std::vector<TrialRecord> exploratory;
  std::vector<TrialRecord> confirmatory;
};
SplitDataset split_dataset(const std::vector<TrialRecord>& trials, std::uint64_t seed);

/// Flags each Control trial as a pseudo-failure with probability `rate`,
/// independently and keyed by (seed, trial_id). Throws on rate outside [0, 1].
std::vector<TrialRecord> simulate_failure_to_treat(std::vector<TrialRecord> trials, double rate, std::uint64_t seed);

}  // namespace cdalab
