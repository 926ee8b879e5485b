#include "cdalab/stats/reports.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "cdalab/text.hpp"

namespace cdalab {

namespace {

std::size_t idx(Condition c) { return static_cast<std::size_t>(c); }

std::string num(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace

double volume_ratio(double buy_total, double control_total, double cost) {
  return cost > 0.0 ? (buy_total - control_total) / cost : 0.0;
}

VolumeAccounting volume_accounting(const DvSet& set) {
  VolumeAccounting v;
  std::vector<double> buy_arm, control, all;
  for (const auto& o : set.observations) {
    if (!o.analysed || o.monitor != 1) continue;
    v.buy_volume[idx(o.condition)] += o.buy_volume;
    v.trials[idx(o.condition)] += 1;
    const auto bv = static_cast<double>(o.buy_volume);
    all.push_back(bv);
    if (o.condition == Condition::Buy) {
      v.intervention_cost += o.trade_size;
      buy_arm.push_back(bv);
    } else if (o.condition == Condition::Control) {
      control.push_back(bv);
    }
  }
  v.effect = static_cast<double>(v.buy_volume[idx(Condition::Buy)] - v.buy_volume[idx(Condition::Control)]);
  v.ratio = volume_ratio(static_cast<double>(v.buy_volume[idx(Condition::Buy)]),
                         static_cast<double>(v.buy_volume[idx(Condition::Control)]),
                         static_cast<double>(v.intervention_cost));
  if (!buy_arm.empty() && !control.empty()) v.mwu = mwu_test(buy_arm, control);
  try {
    v.fat_tail = fat_tail_ratio(all);
  } catch (const std::invalid_argument&) {
    v.fat_tail = std::nan("");
  }
  return v;
}

void write_volume_accounting_csv(std::ostream& out, const VolumeAccounting& v) {
  out << "quantity,value\n";
  out << "buy_volume_buy," << v.buy_volume[0] << '\n';
  out << "buy_volume_sell," << v.buy_volume[1] << '\n';
  out << "buy_volume_control," << v.buy_volume[2] << '\n';
  out << "trials_buy," << v.trials[0] << '\n';
  out << "trials_sell," << v.trials[1] << '\n';
  out << "trials_control," << v.trials[2] << '\n';
  out << "effect," << num(v.effect) << '\n';
  out << "intervention_cost," << v.intervention_cost << '\n';
  out << "ratio," << num(v.ratio) << '\n';
  out << "mwu_u," << num(v.mwu.u) << '\n';
  out << "mwu_z," << num(v.mwu.z) << '\n';
  out << "mwu_p," << num(v.mwu.p_two_sided) << '\n';
  out << "mad_over_rms," << num(v.fat_tail) << '\n';
}

RandomizationReport randomization_report(const std::vector<TrialRecord>& trials) {
  RandomizationReport r;
  std::map<std::string, std::array<std::uint64_t, 6>> per_coin;
  for (const auto& t : trials) {
    const std::size_t c = idx(t.condition);
    r.assigned[c] += 1;
    auto& pc = per_coin[t.coin];
    pc[c] += 1;
    if (analysed(t)) {
      r.analysed[c] += 1;
      pc[3 + c] += 1;
    }
  }
  r.per_coin.assign(per_coin.begin(), per_coin.end());

  const auto b = r.analysed[idx(Condition::Buy)], s = r.analysed[idx(Condition::Sell)],
             k = r.analysed[idx(Condition::Control)];
  if (b + k > 0) r.p_buy_vs_control = binomial_test(b, b + k, 0.5);
  if (s + k > 0) r.p_sell_vs_control = binomial_test(s, s + k, 0.5);
  if (b + s + k > 0) r.p_treated_share = binomial_test(b + s, b + s + k, 2.0 / 3.0);

  const std::vector<std::pair<std::string, double (*)(const MarketStateControls&)>> vars = {
      {"bid_above_last", [](const MarketStateControls& p) { return p.best_buy == QuoteVsLast::Above ? 1.0 : 0.0; }},
      {"bid_below_last", [](const MarketStateControls& p) { return p.best_buy == QuoteVsLast::Below ? 1.0 : 0.0; }},
      {"ask_above_last", [](const MarketStateControls& p) { return p.best_sell == QuoteVsLast::Above ? 1.0 : 0.0; }},
      {"ask_below_last", [](const MarketStateControls& p) { return p.best_sell == QuoteVsLast::Below ? 1.0 : 0.0; }},
      {"last_trade_buy", [](const MarketStateControls& p) { return p.last_trade_was_buy ? 1.0 : 0.0; }},
      {"pct_buy_volume_prev_hour", [](const MarketStateControls& p) { return p.pct_buy_volume_prev_hour; }},
      {"log_relative_volume",
       [](const MarketStateControls& p) { return p.log_relative_volume ? *p.log_relative_volume : std::nan(""); }},
  };
  for (Condition arm : {Condition::Buy, Condition::Sell}) {
    for (const auto& [name, get] : vars) {
      std::vector<double> treat, control;
      for (const auto& t : trials) {
        if (!analysed(t)) continue;
        const double v = get(t.pre_state);
        if (std::isnan(v)) continue;
        if (t.condition == arm) treat.push_back(v);
        if (t.condition == Condition::Control) control.push_back(v);
      }
      BalanceRow row{arm, name, {}};
      if (treat.empty() || control.empty()) {
        row.result.p_two_sided = row.result.p_bonferroni = std::nan("");
      } else {
        row.result = t_test(treat, control);
        row.result.p_bonferroni = bonferroni(row.result.p_two_sided, 2.0 * static_cast<double>(vars.size()));
      }
      r.balance.push_back(row);
    }
  }
  return r;
}

void write_randomization_csv(std::ostream& out, const RandomizationReport& r) {
  out << "quantity,value\n";
  out << "assigned_buy," << r.assigned[0] << '\n';
  out << "assigned_sell," << r.assigned[1] << '\n';
  out << "assigned_control," << r.assigned[2] << '\n';
  out << "analysed_buy," << r.analysed[0] << '\n';
  out << "analysed_sell," << r.analysed[1] << '\n';
  out << "analysed_control," << r.analysed[2] << '\n';
  out << "binomial_p_buy_vs_control," << num(r.p_buy_vs_control) << '\n';
  out << "binomial_p_sell_vs_control," << num(r.p_sell_vs_control) << '\n';
  out << "binomial_p_treated_share," << num(r.p_treated_share) << '\n';
}

void write_balance_csv(std::ostream& out, const RandomizationReport& r) {
  out << "condition,variable,n_control,n_treat,control_mean,mean_effect,t_stat,p_raw,p_value\n";
  for (const auto& b : r.balance) {
    const auto& t = b.result;
    out << to_string(b.arm) << ',' << b.variable << ',' << t.n_control << ',' << t.n_treat << ','
        << num(t.control_mean) << ',' << num(t.mean_effect) << ',' << num(t.t_stat) << ',' << num(t.p_two_sided)
        << ',' << num(t.p_bonferroni) << '\n';
  }
}

void write_per_coin_csv(std::ostream& out, const RandomizationReport& r) {
  out << "coin,assigned_buy,assigned_sell,assigned_control,analysed_buy,analysed_sell,analysed_control\n";
  for (const auto& [coin, c] : r.per_coin) {
    out << coin;
    for (auto v : c) out << ',' << v;
    out << '\n';
  }
}

ImpactRates impact_rates(const std::vector<TrialRecord>& trials) {
  ImpactRates p;
  std::uint64_t raises = 0, lowers = 0, traded = 0;
  for (const auto& t : trials) {
    if (!analysed(t)) continue;
    if (t.condition == Condition::Buy) {
      ++p.buys;
      if (t.pre_state.best_sell == QuoteVsLast::Above) ++raises;
    } else if (t.condition == Condition::Sell) {
      ++p.sells;
      if (t.pre_state.best_buy == QuoteVsLast::Below) ++lowers;
    } else if (!t.monitors[0].missing) {
      ++p.controls;
      if (t.monitors[0].any_trade) ++traded;
    }
  }
  auto frac = [](std::uint64_t a, std::uint64_t n) { return n ? static_cast<double>(a) / static_cast<double>(n) : std::nan(""); };
  p.buy_raises = frac(raises, p.buys);
  p.sell_lowers = frac(lowers, p.sells);
  p.any_trade_15 = frac(traded, p.controls);
  return p;
}

}  // namespace cdalab
