#include "cdalab/stats/dv.hpp"

#include <unordered_map>

namespace cdalab {

DvSet extract_dvs(const std::vector<TrialRecord>& trials) {
  DvSet set;
  std::unordered_map<std::string, std::uint32_t> ids;
  set.observations.reserve(trials.size() * 3);
  for (const auto& t : trials) {
    auto [it, inserted] = ids.emplace(t.coin, static_cast<std::uint32_t>(set.coins.size()));
    if (inserted) set.coins.push_back(t.coin);
    for (int k = 0; k < 3; ++k) {
      const MonitorRecord& m = t.monitors[static_cast<std::size_t>(k)];
      if (m.missing) continue;
      DvObservation o;
      o.trial_id = t.trial_id;
      o.coin = it->second;
      o.condition = t.condition;
      o.analysed = analysed(t);
      o.monitor = k + 1;
      o.intervention_time = t.intervention_time;
      o.trade_size = t.trade_size;
      if (m.last_trade_side) o.buy_indicator = *m.last_trade_side == Side::Buy ? 1.0 : 0.0;
      const Notional total = m.buy_volume + m.sell_volume;
      if (total > 0) o.pct_buy_volume = static_cast<double>(m.buy_volume) / static_cast<double>(total);
      o.any_trade = m.any_trade ? 1.0 : 0.0;
      o.buy_volume = m.buy_volume;
      o.sell_volume = m.sell_volume;
      o.pre_state = t.pre_state;
      set.observations.push_back(o);
    }
  }
  return set;
}

std::string_view dv_label(Dv dv) {
  switch (dv) {
    case Dv::BuyProb: return "Buy Prob.";
    case Dv::SellProb: return "Sell Prob.";
    case Dv::PctBuyVol: return "% Buy Vol.";
    case Dv::PctSellVol: return "% Sell Vol.";
    case Dv::TradeProb: return "Trade Prob.";
  }
  return "?";
}

std::optional<double> dv_value(const DvObservation& o, Dv dv) {
  switch (dv) {
    case Dv::BuyProb: return o.buy_indicator;
    case Dv::SellProb:
      if (!o.buy_indicator) return std::nullopt;
      return 1.0 - *o.buy_indicator;
    case Dv::PctBuyVol: return o.pct_buy_volume;
    case Dv::PctSellVol:
      if (!o.pct_buy_volume) return std::nullopt;
      return 1.0 - *o.pct_buy_volume;
    case Dv::TradeProb: return o.any_trade;
  }
  return std::nullopt;
}

}  // namespace cdalab
