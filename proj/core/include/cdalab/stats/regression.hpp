#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cdalab/error.hpp"
#include "cdalab/harness/harness.hpp"
#include "cdalab/stats/dv.hpp"
#include "cdalab/stats/tests.hpp"

namespace cdalab {

/// Rows of a linear model with optional group fixed effects and clusters.
class LinearModel {
 public:
  explicit LinearModel(std::vector<std::string> names);

  /// `fe` and `cluster` are ignored unless the model uses them.
  void add_row(double y, std::span<const double> x, std::uint32_t fe = 0, std::uint32_t cluster = 0);

  [[nodiscard]] const std::vector<std::string>& names() const { return names_; }
  [[nodiscard]] std::size_t rows() const { return y_.size(); }
  [[nodiscard]] std::size_t cols() const { return names_.size(); }
  [[nodiscard]] double x(std::size_t row, std::size_t col) const { return x_[row * names_.size() + col]; }
  [[nodiscard]] const std::vector<double>& y() const { return y_; }
  [[nodiscard]] const std::vector<std::uint32_t>& fe() const { return fe_; }
  [[nodiscard]] const std::vector<std::uint32_t>& cluster() const { return cluster_; }

 private:
  std::vector<std::string> names_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<std::uint32_t> fe_;
  std::vector<std::uint32_t> cluster_;
};

enum class VarianceKind { Cluster, HC1, Classical };

struct RegressionOptions {
  /// Absorb one intercept per `fe` id; otherwise a "const" column is added.
  bool fixed_effects = true;
  VarianceKind variance = VarianceKind::Cluster;
  /// Cluster: G/(G-1) * (N-1)/(N-K); HC1: N/(N-K). K counts slopes plus absorbed intercepts.
  bool small_sample_correction = true;
  PValueMethod pvalue = PValueMethod::Normal;
  double bonferroni_m = 1.0;
};

class RankDeficient : public DataError {
 public:
  explicit RankDeficient(std::vector<std::string> columns);
  [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
};

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> coef;
  std::vector<double> se;
  std::vector<double> t_stat;
  std::vector<double> p_value;
  std::vector<double> p_bonferroni;
  std::size_t n = 0;
  /// Distinct fixed-effect groups (0 without fixed effects).
  std::size_t fe_groups = 0;
  std::size_t clusters = 0;
  /// Parameters including absorbed intercepts.
  std::size_t k = 0;
  double r_squared = 0.0;
  double within_r_squared = 0.0;
  /// Intercept of each fe id present in the data, indexed by id (NaN when absent).
  std::vector<double> fixed_effects;

  /// Throws std::out_of_range for an unknown name.
  [[nodiscard]] std::size_t index_of(const std::string& name) const;
};

/// OLS on the within-transformed data. Throws RankDeficient naming the
/// columns that are linear combinations of the others (or of the fixed
/// effects), and std::invalid_argument when N <= K.
RegressionResult fit(const LinearModel& model, const RegressionOptions& options = {});

// ---- the analyses -----------------------------------------------------------

/// Market-state controls entering every trial regression, "at last" being
/// the reference category of each triple.
const std::vector<std::string>& control_names();
/// Values in control_names() order; false when a control is undefined.
bool control_values(const MarketStateControls& s, std::vector<double>& out);

/// Stacked regression over all three windows of analysed trials with coin
/// fixed effects and coin-clustered errors: arm indicators, arm x window
/// interactions, window dummies and the market-state controls.
RegressionResult fe_regression(const DvSet& set, Dv dv, const RegressionOptions& options = {});

/// Names of the six treatment coefficients reported per dependent variable.
const std::vector<std::string>& treatment_terms();

struct TreatmentTable {
  struct Row {
    Dv dv;
    std::string term;
    double coef, se, t_stat, p_raw, p_value;
  };
  std::vector<Row> rows;
  std::vector<RegressionResult> fits;  // BuyProb, PctBuyVol, TradeProb
};

/// The three fe_regression fits with 18 treatment rows, Bonferroni m applied to each.
TreatmentTable treatment_table(const DvSet& set, double bonferroni_m = 18.0,
                               PValueMethod method = PValueMethod::Normal);
void write_treatment_table_csv(std::ostream& out, const TreatmentTable& t);

void write_regression_csv(std::ostream& out, const RegressionResult& r);

enum class ClockIndicator { NyseHours, Weekday, UsMarketHoliday, EasternHourRange };

struct ClockSpec {
  ClockIndicator kind = ClockIndicator::NyseHours;
  /// EasternHourRange: [from_hour, to_hour) in US Eastern local time.
  int from_hour = 9;
  int to_hour = 16;
};

/// Offset of US Eastern time from UTC at `t` in hours (-5 or -4).
int eastern_utc_offset_hours(Millis t);
/// NYSE full-day closures (New Year, MLK, Washington, Good Friday, Memorial,
/// Independence, Labor, Thanksgiving, Christmas, with weekend observance).
bool us_market_holiday(Millis t);
/// 9:00-16:00 Eastern on weekdays that are not market holidays.
bool nyse_hours(Millis t);
bool clock_indicator(Millis t, const ClockSpec& spec);

/// Buy versus Sell trials directly (controls excluded) at one window, with the
/// clock indicator and its interaction with the Buy arm, coin fixed effects
/// and coin-clustered errors.
RegressionResult composition_regression(const DvSet& set, Dv dv, int window, const ClockSpec& spec,
                                        const RegressionOptions& options = {});

/// Whether any peer trade is observed at `window`, regressed on arm
/// indicators, controls and every arm x control interaction.
RegressionResult observability_regression(const DvSet& set, int window, const RegressionOptions& options = {});

struct HeterogeneityResult {
  RegressionResult regression;
  std::vector<std::string> coins;  // coins entering the regression
  std::vector<double> effects;     // their treatment - control means
  std::vector<std::string> excluded;
};

/// OLS of per-coin effects on attribute columns with an intercept and
/// classical errors. Throws std::invalid_argument for fewer than five coins.
RegressionResult effect_regression(std::span<const double> effects, const std::vector<std::vector<double>>& attributes,
                                   const std::vector<std::string>& names);

/// Per-coin effect of `arm` on `dv` at `window` regressed on the coin
/// attribute medians. Coins with fewer than two observations in either arm,
/// or with an undefined attribute, are excluded and listed.
HeterogeneityResult heterogeneity_analysis(const DvSet& set, const std::vector<CoinAttributes>& attributes, Dv dv,
                                           Condition arm, int window, double bonferroni_m = 5.0);

}  // namespace cdalab
