#include "cdalab/stats/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "cdalab/stats/effects.hpp"
#include "cdalab/text.hpp"

namespace cdalab {

LinearModel::LinearModel(std::vector<std::string> names) : names_(std::move(names)) {}

void LinearModel::add_row(double y, std::span<const double> x, std::uint32_t fe, std::uint32_t cluster) {
  if (x.size() != names_.size()) {
    throw std::invalid_argument("row has " + std::to_string(x.size()) + " regressors, model has " +
                                std::to_string(names_.size()));
  }
  x_.insert(x_.end(), x.begin(), x.end());
  y_.push_back(y);
  fe_.push_back(fe);
  cluster_.push_back(cluster);
}

namespace {

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

RankDeficient::RankDeficient(std::vector<std::string> columns)
    : DataError("design matrix is rank deficient; collinear columns: " + join(columns)), columns_(std::move(columns)) {}

std::size_t RegressionResult::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no regressor named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

RegressionResult fit(const LinearModel& model, const RegressionOptions& options) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const auto n = static_cast<Index>(model.rows());
  const bool fe = options.fixed_effects;
  std::vector<std::string> names = model.names();
  if (!fe) names.push_back("const");
  const auto p = static_cast<Index>(names.size());

  MatrixXd x(n, p);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < static_cast<Index>(model.cols()); ++j) {
      x(i, j) = model.x(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    if (!fe) x(i, p - 1) = 1.0;
    y(i) = model.y()[static_cast<std::size_t>(i)];
  }
  const MatrixXd x_raw = x;
  const VectorXd y_raw = y;

  // Within transform: subtract each fixed-effect group's means.
  std::map<std::uint32_t, Index> groups;
  std::vector<Index> group_of(static_cast<std::size_t>(n), 0);
  MatrixXd x_means;
  VectorXd y_means;
  if (fe) {
    for (Index i = 0; i < n; ++i) groups.emplace(model.fe()[static_cast<std::size_t>(i)], 0);
    Index g = 0;
    for (auto& [id, idx] : groups) idx = g++;
    x_means = MatrixXd::Zero(g, p);
    y_means = VectorXd::Zero(g);
    VectorXd counts = VectorXd::Zero(g);
    for (Index i = 0; i < n; ++i) {
      const Index k = groups[model.fe()[static_cast<std::size_t>(i)]];
      group_of[static_cast<std::size_t>(i)] = k;
      x_means.row(k) += x.row(i);
      y_means(k) += y(i);
      counts(k) += 1.0;
    }
    for (Index k = 0; k < g; ++k) {
      x_means.row(k) /= counts(k);
      y_means(k) /= counts(k);
    }
    for (Index i = 0; i < n; ++i) {
      const Index k = group_of[static_cast<std::size_t>(i)];
      x.row(i) -= x_means.row(k);
      y(i) -= y_means(k);
    }
  }

  const auto k_params = static_cast<std::size_t>(p) + groups.size();
  if (static_cast<std::size_t>(n) <= k_params) {
    throw std::invalid_argument("regression needs more observations (" + std::to_string(n) + ") than parameters (" +
                                std::to_string(k_params) + ")");
  }

  // Columns scaled to unit norm; a column is collinear with the preceding
  // ones (or the fixed effects) when its orthogonal remainder vanishes.
  constexpr double kTol = 1e-9;
  VectorXd scale(p);
  std::vector<std::string> collinear;
  for (Index j = 0; j < p; ++j) {
    const double raw = x_raw.col(j).norm();
    scale(j) = x.col(j).norm();
    if (raw == 0.0 || scale(j) <= kTol * raw) {
      collinear.push_back(names[static_cast<std::size_t>(j)]);
      scale(j) = 1.0;
    }
    x.col(j) /= scale(j);
  }
  const Eigen::HouseholderQR<MatrixXd> qr(x);
  const MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j) {
    const auto& name = names[static_cast<std::size_t>(j)];
    if (std::abs(r(j, j)) < kTol && std::find(collinear.begin(), collinear.end(), name) == collinear.end()) {
      collinear.push_back(name);
    }
  }
  if (!collinear.empty()) throw RankDeficient(collinear);

  const VectorXd beta_s = qr.solve(y);
  const VectorXd e = y - x * beta_s;
  const MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(p, p));
  const MatrixXd bread = r_inv * r_inv.transpose();

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k_params);
  std::map<std::uint32_t, Index> clusters;
  MatrixXd v;
  double df = nd - kd;
  switch (options.variance) {
    case VarianceKind::Cluster: {
      for (Index i = 0; i < n; ++i) clusters.emplace(model.cluster()[static_cast<std::size_t>(i)], 0);
      Index g = 0;
      for (auto& [id, idx] : clusters) idx = g++;
      if (g < 2) throw std::invalid_argument("cluster-robust errors need at least two clusters");
      MatrixXd scores = MatrixXd::Zero(g, p);
      for (Index i = 0; i < n; ++i) {
        scores.row(clusters[model.cluster()[static_cast<std::size_t>(i)]]) += e(i) * x.row(i);
      }
      const double gd = static_cast<double>(g);
      const double c = options.small_sample_correction ? gd / (gd - 1.0) * (nd - 1.0) / (nd - kd) : 1.0;
      v = c * bread * (scores.transpose() * scores) * bread;
      df = gd - 1.0;
      break;
    }
    case VarianceKind::HC1: {
      const MatrixXd xe = x.array().colwise() * e.array();
      const double c = options.small_sample_correction ? nd / (nd - kd) : 1.0;
      v = c * bread * (xe.transpose() * xe) * bread;
      break;
    }
    case VarianceKind::Classical:
      v = e.squaredNorm() / (nd - kd) * bread;
      break;
  }

  RegressionResult out;
  out.names = names;
  out.n = static_cast<std::size_t>(n);
  out.fe_groups = groups.size();
  out.clusters = clusters.size();
  out.k = k_params;
  VectorXd beta(p);
  for (Index j = 0; j < p; ++j) {
    beta(j) = beta_s(j) / scale(j);
    const double se = std::sqrt(std::max(0.0, v(j, j))) / scale(j);
    const double t = se > 0.0 ? beta(j) / se : (beta(j) == 0.0 ? 0.0 : std::copysign(INFINITY, beta(j)));
    const double pv =
        options.pvalue == PValueMethod::Normal ? normal_two_sided_p(t) : student_two_sided_p(t, df);
    out.coef.push_back(beta(j));
    out.se.push_back(se);
    out.t_stat.push_back(t);
    out.p_value.push_back(pv);
    out.p_bonferroni.push_back(bonferroni(pv, options.bonferroni_m));
  }

  const double ssr = e.squaredNorm();
  const double sst_within = y.squaredNorm();
  const double sst = (y_raw.array() - y_raw.mean()).matrix().squaredNorm();
  out.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  out.within_r_squared = sst_within > 0.0 ? 1.0 - ssr / sst_within : 1.0;
  if (fe) {
    const auto max_id = groups.rbegin()->first;
    out.fixed_effects.assign(static_cast<std::size_t>(max_id) + 1, std::nan(""));
    for (const auto& [id, k] : groups) out.fixed_effects[id] = y_means(k) - x_means.row(k).dot(beta);
  } else {
    out.within_r_squared = out.r_squared;
  }
  return out;
}

// ---- design helpers ---------------------------------------------------------

const std::vector<std::string>& control_names() {
  static const std::vector<std::string> names = {
      "Bid Above Last", "Bid Below Last", "Ask Above Last", "Ask Below Last",
      "Last Trade Buy", "Pct Buy Vol. Prev. Hour", "Log Relative Volume"};
  return names;
}

bool control_values(const MarketStateControls& s, std::vector<double>& out) {
  if (!s.log_relative_volume) return false;
  out.push_back(s.best_buy == QuoteVsLast::Above ? 1.0 : 0.0);
  out.push_back(s.best_buy == QuoteVsLast::Below ? 1.0 : 0.0);
  out.push_back(s.best_sell == QuoteVsLast::Above ? 1.0 : 0.0);
  out.push_back(s.best_sell == QuoteVsLast::Below ? 1.0 : 0.0);
  out.push_back(s.last_trade_was_buy ? 1.0 : 0.0);
  out.push_back(s.pct_buy_volume_prev_hour);
  out.push_back(*s.log_relative_volume);
  return true;
}

const std::vector<std::string>& treatment_terms() {
  static const std::vector<std::string> names = {"Buy Treat.",  "Buy Treat.*Time 2",  "Buy Treat.*Time 3",
                                                 "Sell Treat.", "Sell Treat.*Time 2", "Sell Treat.*Time 3"};
  return names;
}

RegressionResult fe_regression(const DvSet& set, Dv dv, const RegressionOptions& options) {
  std::vector<std::string> names = treatment_terms();
  names.push_back("Time 2");
  names.push_back("Time 3");
  for (const auto& c : control_names()) names.push_back(c);
  LinearModel model(names);
  std::vector<double> row;
  for (const auto& o : set.observations) {
    if (!o.analysed) continue;
    const auto y = dv_value(o, dv);
    if (!y) continue;
    const double buy = o.condition == Condition::Buy ? 1.0 : 0.0;
    const double sell = o.condition == Condition::Sell ? 1.0 : 0.0;
    const double t2 = o.monitor == 2 ? 1.0 : 0.0;
    const double t3 = o.monitor == 3 ? 1.0 : 0.0;
    row = {buy, buy * t2, buy * t3, sell, sell * t2, sell * t3, t2, t3};
    if (!control_values(o.pre_state, row)) continue;
    model.add_row(*y, row, o.coin, o.coin);
  }
  return fit(model, options);
}

TreatmentTable treatment_table(const DvSet& set, double bonferroni_m, PValueMethod method) {
  TreatmentTable t;
  RegressionOptions opts;
  opts.bonferroni_m = bonferroni_m;
  opts.pvalue = method;
  for (Dv dv : {Dv::BuyProb, Dv::PctBuyVol, Dv::TradeProb}) {
    t.fits.push_back(fe_regression(set, dv, opts));
    const auto& r = t.fits.back();
    for (const auto& term : treatment_terms()) {
      const std::size_t i = r.index_of(term);
      t.rows.push_back({dv, term, r.coef[i], r.se[i], r.t_stat[i], r.p_value[i], r.p_bonferroni[i]});
    }
  }
  return t;
}

void write_treatment_table_csv(std::ostream& out, const TreatmentTable& t) {
  out << "dependent_var,independent_var,coef,se,t_stat,p_raw,p_value\n";
  for (const auto& r : t.rows) {
    out << dv_label(r.dv) << ',' << r.term << ',' << format_double(r.coef) << ',' << format_double(r.se) << ','
        << format_double(r.t_stat) << ',' << format_double(r.p_raw) << ',' << format_double(r.p_value) << '\n';
  }
}

void write_regression_csv(std::ostream& out, const RegressionResult& r) {
  out << "independent_var,coef,se,t_stat,p_raw,p_value\n";
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    out << r.names[i] << ',' << format_double(r.coef[i]) << ',' << format_double(r.se[i]) << ','
        << format_double(r.t_stat[i]) << ',' << format_double(r.p_value[i]) << ',' << format_double(r.p_bonferroni[i])
        << '\n';
  }
  out << "# n," << r.n << '\n';
  out << "# fixed_effects," << r.fe_groups << '\n';
  out << "# clusters," << r.clusters << '\n';
  out << "# r_squared," << format_double(r.r_squared) << '\n';
  out << "# within_r_squared," << format_double(r.within_r_squared) << '\n';
}

// ---- wall clock -------------------------------------------------------------

namespace {

using namespace std::chrono;

sys_days utc_day(Millis t) { return floor<days>(sys_time<milliseconds>(milliseconds(t))); }

sys_days easter_sunday(int y) {
  const int a = y % 19, b = y / 100, c = y % 100, d = b / 4, e = b % 4;
  const int f = (b + 8) / 25, g = (b - f + 1) / 3, h = (19 * a + b - d - g + 15) % 30;
  const int i = c / 4, k = c % 4, l = (32 + 2 * e + 2 * i - h - k) % 7;
  const int m = (a + 11 * h + 22 * l) / 451;
  const int month = (h + l - 7 * m + 114) / 31, day = (h + l - 7 * m + 114) % 31 + 1;
  return sys_days{year{y} / month / day};
}

/// Saturday holidays move to Friday, Sunday holidays to Monday.
sys_days observed(sys_days d) {
  const weekday w{d};
  if (w == Saturday) return d - days{1};
  if (w == Sunday) return d + days{1};
  return d;
}

bool is_holiday(sys_days d) {
  const year_month_day ymd{d};
  const year y = ymd.year();
  const int yi = static_cast<int>(y);
  std::vector<sys_days> h = {
      sys_days{y / January / Monday[3]},  sys_days{y / February / Monday[3]}, easter_sunday(yi) - days{2},
      sys_days{y / May / Monday[last]},   observed(sys_days{y / July / 4}),  sys_days{y / September / Monday[1]},
      sys_days{y / November / Thursday[4]}, observed(sys_days{y / December / 25})};
  if (yi >= 2022) h.push_back(observed(sys_days{y / June / 19}));
  // New Year falling on a Saturday is not observed on the preceding Friday.
  const sys_days new_year{y / January / 1};
  if (weekday{new_year} != Saturday) h.push_back(observed(new_year));
  return std::find(h.begin(), h.end(), d) != h.end();
}

}  // namespace

int eastern_utc_offset_hours(Millis t) {
  // Daylight time from the second Sunday of March, 02:00 EST, to the first
  // Sunday of November, 02:00 EDT (the rule in force since 2007).
  const year y = year_month_day{utc_day(t)}.year();
  const auto start = sys_days{y / March / Sunday[2]} + hours{7};
  const auto end = sys_days{y / November / Sunday[1]} + hours{6};
  const sys_time<milliseconds> now{milliseconds(t)};
  return now >= start && now < end ? -4 : -5;
}

namespace {

sys_time<milliseconds> eastern_local(Millis t) {
  return sys_time<milliseconds>(milliseconds(t)) + hours{eastern_utc_offset_hours(t)};
}

}  // namespace

bool us_market_holiday(Millis t) { return is_holiday(floor<days>(eastern_local(t))); }

bool nyse_hours(Millis t) {
  const auto local = eastern_local(t);
  const sys_days day = floor<days>(local);
  const weekday w{day};
  if (w == Saturday || w == Sunday || is_holiday(day)) return false;
  const auto hour = floor<hours>(local - day).count();
  return hour >= 9 && hour < 16;
}

bool clock_indicator(Millis t, const ClockSpec& spec) {
  switch (spec.kind) {
    case ClockIndicator::NyseHours: return nyse_hours(t);
    case ClockIndicator::Weekday: {
      const weekday w{floor<days>(eastern_local(t))};
      return w != Saturday && w != Sunday;
    }
    case ClockIndicator::UsMarketHoliday: return us_market_holiday(t);
    case ClockIndicator::EasternHourRange: {
      const auto local = eastern_local(t);
      const auto hour = floor<hours>(local - floor<days>(local)).count();
      return spec.from_hour <= spec.to_hour ? hour >= spec.from_hour && hour < spec.to_hour
                                            : hour >= spec.from_hour || hour < spec.to_hour;
    }
  }
  return false;
}

namespace {

std::string clock_label(const ClockSpec& spec) {
  switch (spec.kind) {
    case ClockIndicator::NyseHours: return "NYSE Hours";
    case ClockIndicator::Weekday: return "Weekday";
    case ClockIndicator::UsMarketHoliday: return "US Holiday";
    case ClockIndicator::EasternHourRange:
      return "ET " + std::to_string(spec.from_hour) + "-" + std::to_string(spec.to_hour);
  }
  return "Clock";
}

}  // namespace

RegressionResult composition_regression(const DvSet& set, Dv dv, int window, const ClockSpec& spec,
                                        const RegressionOptions& options) {
  const std::string label = clock_label(spec);
  std::vector<std::string> names = {"Buy Treat.", label, "Buy Treat.*" + label};
  for (const auto& c : control_names()) names.push_back(c);
  LinearModel model(names);
  std::vector<double> row;
  for (const auto& o : set.observations) {
    if (!o.analysed || o.condition == Condition::Control || o.monitor != window) continue;
    const auto y = dv_value(o, dv);
    if (!y) continue;
    const double buy = o.condition == Condition::Buy ? 1.0 : 0.0;
    const double ind = clock_indicator(o.intervention_time, spec) ? 1.0 : 0.0;
    row = {buy, ind, buy * ind};
    if (!control_values(o.pre_state, row)) continue;
    model.add_row(*y, row, o.coin, o.coin);
  }
  return fit(model, options);
}

RegressionResult observability_regression(const DvSet& set, int window, const RegressionOptions& options) {
  std::vector<std::string> names = {"Buy Treat.", "Sell Treat."};
  for (const auto& c : control_names()) names.push_back(c);
  for (const char* arm : {"Buy Treat.", "Sell Treat."}) {
    for (const auto& c : control_names()) names.push_back(std::string(arm) + "*" + c);
  }
  const std::size_t nc = control_names().size();
  LinearModel model(names);
  std::vector<double> row;
  for (const auto& o : set.observations) {
    if (!o.analysed || o.monitor != window) continue;
    const double buy = o.condition == Condition::Buy ? 1.0 : 0.0;
    const double sell = o.condition == Condition::Sell ? 1.0 : 0.0;
    row = {buy, sell};
    if (!control_values(o.pre_state, row)) continue;
    for (double arm : {buy, sell}) {
      for (std::size_t i = 0; i < nc; ++i) row.push_back(arm * row[2 + i]);
    }
    model.add_row(o.any_trade, row, o.coin, o.coin);
  }
  RegressionOptions opts = options;
  opts.bonferroni_m = static_cast<double>(2 * nc);
  return fit(model, opts);
}

RegressionResult effect_regression(std::span<const double> effects, const std::vector<std::vector<double>>& attributes,
                                   const std::vector<std::string>& names) {
  if (effects.size() < 5) throw std::invalid_argument("heterogeneity regression needs at least five coins");
  if (attributes.size() != effects.size()) throw std::invalid_argument("one attribute row per effect is required");
  LinearModel model(names);
  for (std::size_t i = 0; i < effects.size(); ++i) model.add_row(effects[i], attributes[i]);
  RegressionOptions opts;
  opts.fixed_effects = false;
  opts.variance = VarianceKind::Classical;
  opts.pvalue = PValueMethod::StudentWelch;
  opts.bonferroni_m = static_cast<double>(names.size());
  return fit(model, opts);
}

HeterogeneityResult heterogeneity_analysis(const DvSet& set, const std::vector<CoinAttributes>& attributes, Dv dv,
                                           Condition arm, int window, double bonferroni_m) {
  struct Acc {
    double sum[2] = {0, 0};
    std::size_t n[2] = {0, 0};
  };
  std::vector<Acc> acc(set.coins.size());
  for (const auto& o : set.observations) {
    if (!o.analysed || o.monitor != window) continue;
    if (o.condition != arm && o.condition != Condition::Control) continue;
    const auto y = dv_value(o, dv);
    if (!y) continue;
    const int k = o.condition == arm ? 0 : 1;
    acc[o.coin].sum[k] += *y;
    acc[o.coin].n[k] += 1;
  }
  std::map<std::string, const CoinAttributes*> by_name;
  for (const auto& a : attributes) by_name[a.coin] = &a;

  HeterogeneityResult out;
  std::vector<std::vector<double>> rows;
  for (std::size_t c = 0; c < set.coins.size(); ++c) {
    const auto& name = set.coins[c];
    const auto it = by_name.find(name);
    const Acc& a = acc[c];
    if (a.n[0] < 2 || a.n[1] < 2 || it == by_name.end()) {
      out.excluded.push_back(name);
      continue;
    }
    const CoinAttributes& attr = *it->second;
    std::vector<double> row = {attr.price, attr.volume, attr.spread, attr.best_sell_size, attr.best_buy_size};
    if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
      out.excluded.push_back(name);
      continue;
    }
    out.coins.push_back(name);
    out.effects.push_back(a.sum[0] / static_cast<double>(a.n[0]) - a.sum[1] / static_cast<double>(a.n[1]));
    rows.push_back(std::move(row));
  }
  out.regression = effect_regression(out.effects, rows, {"Price", "Volume", "Spread", "Best Sell Size", "Best Buy Size"});
  for (std::size_t i = 0; i < out.regression.p_value.size(); ++i) {
    out.regression.p_bonferroni[i] = bonferroni(out.regression.p_value[i], bonferroni_m);
  }
  return out;
}

}  // namespace cdalab
