#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdalab/harness/trial.hpp"
#include "cdalab/stats/dv.hpp"
#include "cdalab/stats/tests.hpp"

namespace cdalab {

struct VolumeAccounting {
  /// Window-1 peer buy volume summed per condition (Buy, Sell, Control), analysed trials.
  std::array<Notional, 3> buy_volume{};
  std::array<std::uint64_t, 3> trials{};
  /// Buy-arm total minus control total.
  double effect = 0.0;
  /// Summed trade size of the analysed buy trials.
  Notional intervention_cost = 0;
  /// effect / intervention_cost, 0 without cost.
  double ratio = 0.0;
  /// Per-trial window-1 buy volume, buy arm against controls.
  MwuResult mwu;
  /// MAD/RMS of the per-trial window-1 buy volumes of all analysed trials (NaN when degenerate).
  double fat_tail = 0.0;
};

/// (buy total - control total) / cost, 0 when the cost is zero.
double volume_ratio(double buy_total, double control_total, double cost);

VolumeAccounting volume_accounting(const DvSet& set);
void write_volume_accounting_csv(std::ostream& out, const VolumeAccounting& v);

struct BalanceRow {
  Condition arm = Condition::Buy;
  std::string variable;
  TestResult result;
};

struct RandomizationReport {
  std::array<std::uint64_t, 3> assigned{};  // trials per drawn arm
  std::array<std::uint64_t, 3> analysed{};  // executed treatments, retained controls
  /// Each treatment arm against control, executed counts, at p = 1/2.
  double p_buy_vs_control = 1.0;
  double p_sell_vs_control = 1.0;
  /// Executed treatments among all analysed trials at p = 2/3.
  double p_treated_share = 1.0;
  /// Pre-treatment controls of analysed treatment trials against analysed controls.
  std::vector<BalanceRow> balance;
  /// Per coin: assigned (buy, sell, control) and analysed (buy, sell, control).
  std::vector<std::pair<std::string, std::array<std::uint64_t, 6>>> per_coin;
};

RandomizationReport randomization_report(const std::vector<TrialRecord>& trials);
void write_randomization_csv(std::ostream& out, const RandomizationReport& r);
void write_balance_csv(std::ostream& out, const RandomizationReport& r);
void write_per_coin_csv(std::ostream& out, const RandomizationReport& r);

struct ImpactRates {
  /// Executed buys facing an ask above the last price: the buy sets a higher last price.
  double buy_raises = 0.0;
  /// Executed sells facing a bid below the last price.
  double sell_lowers = 0.0;
  /// Window-1 trade probability of the analysed controls.
  double any_trade_15 = 0.0;
  std::uint64_t buys = 0, sells = 0, controls = 0;
};

ImpactRates impact_rates(const std::vector<TrialRecord>& trials);

}  // namespace cdalab
