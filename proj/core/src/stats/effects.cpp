#include "cdalab/stats/effects.hpp"

#include <cmath>
#include <ostream>

#include "cdalab/text.hpp"

namespace cdalab {

std::array<Dv, 3> arm_dvs(Condition arm) {
  if (arm == Condition::Sell) return {Dv::SellProb, Dv::PctSellVol, Dv::TradeProb};
  return {Dv::BuyProb, Dv::PctBuyVol, Dv::TradeProb};
}

std::string_view window_label(int window) {
  switch (window) {
    case 1: return "15 Min.";
    case 2: return "30 Min.";
    case 3: return "60 Min.";
  }
  return "?";
}

std::vector<double> cell_values(const DvSet& set, Condition condition, int window, Dv dv) {
  std::vector<double> out;
  for (const auto& o : set.observations) {
    if (!o.analysed || o.condition != condition || o.monitor != window) continue;
    if (auto v = dv_value(o, dv)) out.push_back(*v);
  }
  return out;
}

EffectTable build_effect_table(const DvSet& set, double bonferroni_m, PValueMethod method) {
  EffectTable table;
  table.bonferroni_m = bonferroni_m;
  for (int w = 1; w <= 3; ++w) {
    for (Condition arm : {Condition::Buy, Condition::Sell}) {
      for (Dv dv : arm_dvs(arm)) {
        EffectRow row;
        row.window = w;
        row.condition = arm;
        row.dv = dv;
        const auto treat = cell_values(set, arm, w, dv);
        const auto control = cell_values(set, Condition::Control, w, dv);
        if (treat.empty() || control.empty()) {
          row.missing = true;
          const double nan = std::nan("");
          row.result = TestResult{control.size(), treat.size(), nan, nan, nan, nan, nan, false};
        } else {
          row.result = t_test(treat, control, method);
          row.result.p_bonferroni = bonferroni(row.result.p_two_sided, bonferroni_m);
        }
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

void write_effect_table_csv(std::ostream& out, const EffectTable& table) {
  out << "time,condition,dependent_var,n_control,n_treat,control_mean,mean_effect,t_stat,p_raw,p_value\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (const auto& r : table.rows) {
    const auto& t = r.result;
    out << window_label(r.window) << ',' << (r.condition == Condition::Buy ? "Buy" : "Sell") << ','
        << dv_label(r.dv) << ',' << t.n_control << ',' << t.n_treat << ',' << num(t.control_mean) << ','
        << num(t.mean_effect) << ',' << num(t.t_stat) << ',' << num(t.p_two_sided) << ',' << num(t.p_bonferroni)
        << '\n';
  }
}

}  // namespace cdalab
