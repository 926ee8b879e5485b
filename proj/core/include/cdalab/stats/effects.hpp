#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "cdalab/stats/dv.hpp"
#include "cdalab/stats/tests.hpp"

namespace cdalab {

struct EffectRow {
  int window = 1;  // 1: 15 min, 2: 30 min, 3: 60 min
  Condition condition = Condition::Buy;
  Dv dv = Dv::BuyProb;
  TestResult result;
  /// No observation in the treatment or the control cell.
  bool missing = false;
};

struct EffectTable {
  double bonferroni_m = 18.0;
  std::vector<EffectRow> rows;
};

/// Dependent variables of the rows for one arm, in table order.
std::array<Dv, 3> arm_dvs(Condition arm);

std::string_view window_label(int window);

/// 18 Welch tests of analysed treatment observations against analysed
/// controls, ordered by window, then arm (Buy, Sell), then DV.
EffectTable build_effect_table(const DvSet& set, double bonferroni_m = 18.0,
                               PValueMethod method = PValueMethod::Normal);

void write_effect_table_csv(std::ostream& out, const EffectTable& table);

/// Values of `dv` for analysed observations of `condition` at `window`.
std::vector<double> cell_values(const DvSet& set, Condition condition, int window, Dv dv);

}  // namespace cdalab
