#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cdalab/harness/trial.hpp"

namespace cdalab {

/// One (trial, monitor) pair. Missing monitors produce no observation.
struct DvObservation {
  std::uint64_t trial_id = 0;
  std::uint32_t coin = 0;  // index into DvSet::coins
  Condition condition = Condition::Control;
  /// Executed treatment, or a Control not flagged as a pseudo-failure.
  bool analysed = false;
  int monitor = 1;  // 1, 2, 3
  Millis intervention_time = 0;
  Notional trade_size = 0;
  /// 1 when the window's last peer trade was a buy; absent without a trade.
  std::optional<double> buy_indicator;
  /// Buy share of the window's peer volume; absent when the volume is zero.
  std::optional<double> pct_buy_volume;
  double any_trade = 0.0;
  Notional buy_volume = 0;
  Notional sell_volume = 0;
  MarketStateControls pre_state;
};

struct DvSet {
  std::vector<std::string> coins;
  std::vector<DvObservation> observations;
};

/// Coins are numbered in order of first appearance.
DvSet extract_dvs(const std::vector<TrialRecord>& trials);

enum class Dv : std::uint8_t { BuyProb, SellProb, PctBuyVol, PctSellVol, TradeProb };

std::string_view dv_label(Dv dv);

/// The observation's value for `dv`; sell variants are complements of the buy ones.
std::optional<double> dv_value(const DvObservation& o, Dv dv);

}  // namespace cdalab
