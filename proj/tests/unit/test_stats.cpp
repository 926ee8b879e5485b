#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cdalab/sim/rng.hpp"
#include "cdalab/stats/bootstrap.hpp"
#include "cdalab/stats/effects.hpp"
#include "cdalab/stats/regression.hpp"
#include "cdalab/stats/reports.hpp"
#include "support/ols_oracle.hpp"
#include "support/stat_helpers.hpp"

using namespace cdalab;
using doctest::Approx;

namespace {

MonitorRecord monitor(Notional buys, Notional sells, std::optional<Side> last) {
  MonitorRecord m;
  m.buy_volume = buys;
  m.sell_volume = sells;
  m.trade_count = (buys > 0) + (sells > 0);
  m.any_trade = m.trade_count > 0;
  m.last_trade_side = last;
  return m;
}

MonitorRecord quiet() { return monitor(0, 0, std::nullopt); }

TrialRecord trial(std::uint64_t id, const std::string& coin, Condition c, std::array<MonitorRecord, 3> m) {
  TrialRecord t;
  t.trial_id = id;
  t.coin = coin;
  t.condition = c;
  t.intervened = c != Condition::Control;
  t.trade_size = c == Condition::Control ? 0 : 100;
  t.intervention_time = 1'412'121'600'000 + static_cast<Millis>(id) * kHour;
  t.pre_state.log_relative_volume = 0.0;
  t.monitors = m;
  return t;
}

MarketStateControls random_controls(Rng& rng) {
  MarketStateControls s;
  s.best_buy = static_cast<QuoteVsLast>(rng.uniform_int(0, 2));
  s.best_sell = static_cast<QuoteVsLast>(rng.uniform_int(0, 2));
  s.last_trade_was_buy = rng.bernoulli(0.3);
  s.pct_buy_volume_prev_hour = rng.uniform();
  s.log_relative_volume = rng.normal();
  return s;
}

/// Observations of `trials_per_coin` trials per coin, one per monitor, with
/// Buy Prob. drawn as Bernoulli(base + coin offset + effect(arm, monitor)).
template <typename Effect>
DvSet synthetic_set(std::uint64_t seed, std::uint32_t coins, int trials_per_coin, Effect effect) {
  Rng rng(seed);
  DvSet set;
  std::uint64_t id = 0;
  for (std::uint32_t c = 0; c < coins; ++c) {
    set.coins.push_back("C" + std::to_string(c));
    const double offset = rng.uniform(-0.1, 0.1);
    for (int i = 0; i < trials_per_coin; ++i) {
      const auto arm = static_cast<Condition>(rng.uniform_int(0, 2));
      const MarketStateControls pre = random_controls(rng);
      const Millis t = 1'412'121'600'000 + rng.uniform_int(0, 60 * kDay);
      ++id;
      for (int m = 1; m <= 3; ++m) {
        DvObservation o;
        o.trial_id = id;
        o.coin = c;
        o.condition = arm;
        o.analysed = true;
        o.monitor = m;
        o.intervention_time = t;
        o.pre_state = pre;
        const double p = 0.28 + offset + effect(arm, m, t);
        o.buy_indicator = rng.bernoulli(p) ? 1.0 : 0.0;
        o.pct_buy_volume = *o.buy_indicator;
        o.any_trade = 1.0;
        set.observations.push_back(o);
      }
    }
  }
  return set;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

// ---- DV extraction ----------------------------------------------------------

TEST_CASE("dv extraction: quiet monitors and volume shares") {
  const std::vector<TrialRecord> trials = {
      trial(1, "AAA", Condition::Buy, {quiet(), monitor(30, 10, Side::Sell), MonitorRecord{true}}),
  };
  const DvSet set = extract_dvs(trials);
  REQUIRE(set.observations.size() == 2);
  const auto& q = set.observations[0];
  CHECK_FALSE(q.buy_indicator.has_value());
  CHECK_FALSE(q.pct_buy_volume.has_value());
  CHECK(q.any_trade == 0.0);
  const auto& v = set.observations[1];
  CHECK(v.monitor == 2);
  CHECK(*v.pct_buy_volume == 0.75);
  CHECK(*v.buy_indicator == 0.0);
  CHECK(*dv_value(v, Dv::SellProb) == 1.0);
  CHECK(*dv_value(v, Dv::PctSellVol) == 0.25);
}

TEST_CASE("dv means over a small log equal hand-computed means") {
  // Window 1 values, controls:  buy_ind {1, 0, -}, pct {0.5, 0.2, -}, any {1, 1, 0}
  //                  buy arm:   buy_ind {1, 1},    pct {0.9, 1.0},    any {1, 1}
  const std::vector<TrialRecord> trials = {
      trial(1, "A", Condition::Control, {monitor(50, 50, Side::Buy), quiet(), quiet()}),
      trial(2, "B", Condition::Control, {monitor(20, 80, Side::Sell), quiet(), quiet()}),
      trial(3, "A", Condition::Control, {quiet(), quiet(), quiet()}),
      trial(4, "A", Condition::Buy, {monitor(90, 10, Side::Buy), quiet(), quiet()}),
      trial(5, "B", Condition::Buy, {monitor(40, 0, Side::Buy), quiet(), quiet()}),
  };
  const DvSet set = extract_dvs(trials);
  CHECK(set.coins == std::vector<std::string>{"A", "B"});
  const EffectTable t = build_effect_table(set);
  REQUIRE(t.rows.size() == 18);
  const auto& buy_prob = t.rows[0].result;
  CHECK(buy_prob.n_control == 2);
  CHECK(buy_prob.n_treat == 2);
  CHECK(buy_prob.control_mean == Approx(0.5));
  CHECK(buy_prob.mean_effect == Approx(0.5));
  const auto& pct = t.rows[1].result;
  CHECK(pct.control_mean == Approx(0.35));
  CHECK(pct.mean_effect == Approx(0.6));
  const auto& any = t.rows[2].result;
  CHECK(any.n_control == 3);
  CHECK(any.control_mean == Approx(2.0 / 3.0));
  CHECK(any.mean_effect == Approx(1.0 / 3.0));
  // No sell trials: those rows are kept and flagged.
  for (std::size_t i = 3; i < 6; ++i) CHECK(t.rows[i].missing);
  CHECK_FALSE(t.rows[0].missing);
}

TEST_CASE("complementarity of sell and buy DVs on the same observations") {
  const DvSet set = synthetic_set(3, 5, 200, [](Condition, int, Millis) { return 0.0; });
  for (int w = 1; w <= 3; ++w) {
    for (Condition c : {Condition::Buy, Condition::Sell, Condition::Control}) {
      const auto buy = cell_values(set, c, w, Dv::BuyProb);
      const auto sell = cell_values(set, c, w, Dv::SellProb);
      const auto pb = cell_values(set, c, w, Dv::PctBuyVol);
      const auto ps = cell_values(set, c, w, Dv::PctSellVol);
      REQUIRE(buy.size() == sell.size());
      const double mb = std::accumulate(buy.begin(), buy.end(), 0.0) / static_cast<double>(buy.size());
      const double ms = std::accumulate(sell.begin(), sell.end(), 0.0) / static_cast<double>(sell.size());
      CHECK(std::abs(ms - (1.0 - mb)) < 1e-12);
      const double mpb = std::accumulate(pb.begin(), pb.end(), 0.0) / static_cast<double>(pb.size());
      const double mps = std::accumulate(ps.begin(), ps.end(), 0.0) / static_cast<double>(ps.size());
      CHECK(std::abs(mps - (1.0 - mpb)) < 1e-12);
    }
  }
}

// ---- t tests and the effect table ---------------------------------------------

TEST_CASE("published probability rows reconstruct from Bernoulli variances") {
  struct Row {
    double n_c, n_t, mean_c, effect, t_pub;
  };
  const Row rows[] = {
      {25483, 25602, 0.279, 0.019, 4.79},  {52050, 51314, 0.490, 0.009, 3.00}, {25483, 25987, 0.721, -0.006, -1.44},
      {52050, 51727, 0.490, 0.013, 4.12},  {23647, 23871, 0.278, 0.003, 0.83}, {52049, 51312, 0.454, 0.011, 3.51},
      {23647, 23809, 0.722, 0.001, 0.15},  {52049, 51724, 0.454, 0.006, 1.94}, {31065, 31118, 0.274, 0.003, 0.76},
      {52030, 51288, 0.597, 0.010, 3.18},  {31065, 31351, 0.726, 0.000, 0.14}, {52030, 51713, 0.597, 0.009, 3.02},
  };
  for (const Row& r : rows) {
    const double mt = r.mean_c + r.effect;
    const double t = welch_t(mt, mt * (1 - mt), r.n_t, r.mean_c, r.mean_c * (1 - r.mean_c), r.n_c);
    CHECK(std::abs(t - r.t_pub) <= 0.2);
  }
  const double t1 = welch_t(0.298, 0.298 * 0.702, 25602, 0.279, 0.279 * 0.721, 25483);
  CHECK(t1 == Approx(4.74).epsilon(0.005));
  CHECK(bonferroni(1.64e-6, 18) == Approx(2.952e-5));
  CHECK(bonferroni(normal_two_sided_p(4.79), 18) == Approx(2.96e-5).epsilon(0.25));
  CHECK(bonferroni(0.2, 18) == 1.0);
}

TEST_CASE("identical samples give t = 0 and p = 1") {
  const std::vector<double> a = {0.1, 0.5, 0.9, 0.3};
  const TestResult r = t_test(a, a);
  CHECK(r.t_stat == 0.0);
  CHECK(r.p_two_sided == 1.0);
  CHECK(r.n_control == 4);
  const std::vector<double> ones(10, 1.0), zeros(10, 0.0);
  const TestResult d = t_test(ones, zeros);
  CHECK(d.degenerate);
  CHECK(std::isinf(d.t_stat));
  CHECK(d.p_two_sided == 0.0);
  const TestResult same = t_test(ones, ones);
  CHECK(same.t_stat == 0.0);
  CHECK_FALSE(same.degenerate);
  CHECK_THROWS_AS((void)t_test({}, a), std::invalid_argument);
}

TEST_CASE("student p values approach the normal ones") {
  CHECK(student_two_sided_p(2.0, 1e7) == Approx(normal_two_sided_p(2.0)).epsilon(1e-5));
  CHECK(student_two_sided_p(2.228, 10) == Approx(0.05).epsilon(1e-3));
  CHECK(normal_two_sided_p(1.959963985) == Approx(0.05).epsilon(1e-8));
}

TEST_CASE("effect table layout and Bonferroni invariant") {
  const DvSet base = synthetic_set(9, 6, 300, [](Condition, int, Millis) { return 0.0; });
  const EffectTable t = build_effect_table(base);
  REQUIRE(t.rows.size() == 18);
  std::size_t i = 0;
  for (int w = 1; w <= 3; ++w) {
    for (Condition arm : {Condition::Buy, Condition::Sell}) {
      for (Dv dv : arm_dvs(arm)) {
        CHECK(t.rows[i].window == w);
        CHECK(t.rows[i].condition == arm);
        CHECK(t.rows[i].dv == dv);
        CHECK(t.rows[i].result.p_bonferroni == std::min(1.0, 18.0 * t.rows[i].result.p_two_sided));
        ++i;
      }
    }
  }
  std::ostringstream out;
  write_effect_table_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "time,condition,dependent_var,n_control,n_treat,control_mean,mean_effect,t_stat,p_raw,p_value");
  std::getline(in, line);
  CHECK(line.rfind("15 Min.,Buy,Buy Prob.,", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 17);
}

// ---- regression ---------------------------------------------------------------

TEST_CASE("noiseless y = 2x plus coin offsets") {
  LinearModel m({"x"});
  Rng rng(1);
  for (std::uint32_t c = 0; c < 4; ++c) {
    for (int i = 0; i < 25; ++i) {
      const double x = rng.normal();
      m.add_row(2.0 * x + 10.0 * c - 3.0, std::array{x}, c, c);
    }
  }
  const auto r = fit(m);
  CHECK(std::abs(r.coef[0] - 2.0) <= 1e-10);
  CHECK(r.se[0] < 1e-10);
  CHECK(r.fe_groups == 4);
  CHECK(r.k == 5);
  CHECK(r.fixed_effects[2] == Approx(17.0));
  CHECK(r.r_squared == Approx(1.0));
}

TEST_CASE("3 coins x 5 observations: sandwich equals the term-by-term oracle") {
  // x1 continuous, x2 binary; one dummy column per coin in the oracle.
  const double x1[15] = {0.3, -1.2, 2.5, 0.8, -0.4, 1.1, 0.0, -2.2, 0.6, 1.9, -0.7, 0.4, 1.5, -1.0, 0.2};
  const double x2[15] = {1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1};
  const double y[15] = {1.2, -0.5, 3.1, 2.0, 0.1, 2.2, 1.9, -1.4, 2.5, 3.0, 0.4, 1.7, 3.3, -0.2, 1.6};
  LinearModel m({"x1", "x2"});
  testing::Matrix x;
  std::vector<double> ys;
  std::vector<int> cl;
  for (int i = 0; i < 15; ++i) {
    const int coin = i / 5;
    m.add_row(y[i], std::array{x1[i], x2[i]}, static_cast<std::uint32_t>(coin), static_cast<std::uint32_t>(coin));
    x.push_back({x1[i], x2[i], coin == 0 ? 1.0 : 0.0, coin == 1 ? 1.0 : 0.0, coin == 2 ? 1.0 : 0.0});
    ys.push_back(y[i]);
    cl.push_back(coin);
  }
  const auto r = fit(m);
  const auto o = testing::oracle_ols(x, ys, cl, testing::OracleVariance::Cluster);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(rel_diff(r.coef[j], o.beta[j]) < 1e-10);
    CHECK(rel_diff(r.se[j], o.se[j]) < 1e-8);
  }
  for (std::size_t c = 0; c < 3; ++c) CHECK(rel_diff(r.fixed_effects[c], o.beta[2 + c]) < 1e-10);
  CHECK(r.clusters == 3);
}

TEST_CASE("singleton clusters reproduce HC1") {
  Rng rng(5);
  LinearModel m({"a", "b"});
  testing::Matrix x;
  std::vector<double> ys;
  std::vector<int> ids;
  for (std::uint32_t i = 0; i < 60; ++i) {
    const double a = rng.normal(), b = rng.uniform();
    const double y = 1.0 + 0.5 * a - b + rng.normal() * (1.0 + std::abs(a));
    m.add_row(y, std::array{a, b}, 0, i);
    x.push_back({a, b, 1.0});
    ys.push_back(y);
    ids.push_back(static_cast<int>(i));
  }
  RegressionOptions cluster;
  cluster.fixed_effects = false;
  RegressionOptions hc1 = cluster;
  hc1.variance = VarianceKind::HC1;
  const auto rc = fit(m, cluster);
  const auto rh = fit(m, hc1);
  const auto o = testing::oracle_ols(x, ys, ids, testing::OracleVariance::HC1);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(rel_diff(rc.se[j], rh.se[j]) < 1e-10);
    CHECK(rel_diff(rh.se[j], o.se[j]) < 1e-8);
  }
  CHECK(rc.names.back() == "const");
}

TEST_CASE("shifting one coin's outcomes moves only its fixed effect") {
  DvSet set = synthetic_set(11, 8, 150, [](Condition c, int m, Millis) {
    return c == Condition::Buy && m == 1 ? 0.05 : 0.0;
  });
  const auto before = fe_regression(set, Dv::BuyProb);
  for (auto& o : set.observations) {
    if (o.coin == 3) *o.buy_indicator += 0.37;
  }
  const auto after = fe_regression(set, Dv::BuyProb);
  for (std::size_t j = 0; j < before.coef.size(); ++j) CHECK(std::abs(after.coef[j] - before.coef[j]) < 1e-8);
  for (std::size_t c = 0; c < 8; ++c) {
    const double shift = c == 3 ? 0.37 : 0.0;
    CHECK(std::abs(after.fixed_effects[c] - before.fixed_effects[c] - shift) < 1e-8);
  }
}

TEST_CASE("rank deficiency names the collinear columns") {
  LinearModel m({"x", "twice x", "coin level"});
  Rng rng(2);
  for (std::uint32_t c = 0; c < 3; ++c) {
    for (int i = 0; i < 10; ++i) {
      const double x = rng.normal();
      m.add_row(rng.normal(), std::array{x, 2.0 * x, static_cast<double>(c)}, c, c);
    }
  }
  try {
    (void)fit(m);
    FAIL("expected RankDeficient");
  } catch (const RankDeficient& e) {
    CHECK(e.columns() == std::vector<std::string>{"coin level", "twice x"});
    CHECK(std::string(e.what()).find("twice x") != std::string::npos);
  }
}

TEST_CASE("treatment regression recovers a decaying buy effect") {
  // 0.016 at monitor 1, 0.004 at monitor 2, none at monitor 3.
  const DvSet set = synthetic_set(2024, 60, 2000, [](Condition c, int m, Millis) {
    if (c != Condition::Buy) return 0.0;
    return m == 1 ? 0.016 : m == 2 ? 0.004 : 0.0;
  });
  const TreatmentTable t = treatment_table(set);
  REQUIRE(t.rows.size() == 18);
  CHECK(t.rows[0].term == "Buy Treat.");
  CHECK(t.rows[0].dv == Dv::BuyProb);
  const auto& fit_buy = t.fits[0];
  const double b = fit_buy.coef[fit_buy.index_of("Buy Treat.")];
  const double se = fit_buy.se[fit_buy.index_of("Buy Treat.")];
  CHECK(std::abs(b - 0.016) <= 2 * se);
  CHECK(fit_buy.coef[fit_buy.index_of("Buy Treat.*Time 2")] < 0.0);
  CHECK(fit_buy.coef[fit_buy.index_of("Buy Treat.*Time 3")] < 0.0);
  CHECK(fit_buy.fe_groups == 60);
  CHECK(fit_buy.clusters == 60);
  // controls (7) + time dummies (2) + treatment terms (6) + coin intercepts
  CHECK(fit_buy.k == 7 + 2 + 6 + 60);
  for (const auto& row : t.rows) CHECK(row.p_value == std::min(1.0, 18.0 * row.p_raw));

  std::ostringstream out;
  write_treatment_table_csv(out, t);
  CHECK(out.str().rfind("dependent_var,independent_var,coef,se,t_stat,p_raw,p_value\nBuy Prob.,Buy Treat.,", 0) == 0);
}

// ---- clock indicators and composition -------------------------------------------

TEST_CASE("eastern time, NYSE hours and holidays") {
  using namespace std::chrono;
  auto at = [](int y, unsigned mo, unsigned d, int h, int mi = 0) {
    const auto tp = sys_days{year{y} / month{mo} / day{d}} + hours{h} + minutes{mi};
    return static_cast<Millis>(duration_cast<milliseconds>(tp.time_since_epoch()).count());
  };
  CHECK(eastern_utc_offset_hours(at(2014, 10, 1, 12)) == -4);
  CHECK(eastern_utc_offset_hours(at(2014, 12, 1, 12)) == -5);
  CHECK(eastern_utc_offset_hours(at(2014, 11, 2, 5, 59)) == -4);  // 01:59 EDT
  CHECK(eastern_utc_offset_hours(at(2014, 11, 2, 6, 0)) == -5);
  CHECK(eastern_utc_offset_hours(at(2014, 3, 9, 6, 59)) == -5);
  CHECK(eastern_utc_offset_hours(at(2014, 3, 9, 7, 0)) == -4);

  CHECK(nyse_hours(at(2014, 10, 1, 13)));          // Wed 09:00 EDT
  CHECK_FALSE(nyse_hours(at(2014, 10, 1, 12, 59)));
  CHECK(nyse_hours(at(2014, 10, 1, 19, 59)));      // 15:59 EDT
  CHECK_FALSE(nyse_hours(at(2014, 10, 1, 20)));
  CHECK(nyse_hours(at(2014, 12, 1, 14)));          // 09:00 EST
  CHECK_FALSE(nyse_hours(at(2014, 10, 4, 15)));    // Saturday
  CHECK_FALSE(nyse_hours(at(2014, 11, 27, 16)));   // Thanksgiving
  CHECK(us_market_holiday(at(2014, 11, 27, 16)));
  CHECK(us_market_holiday(at(2014, 12, 25, 16)));
  CHECK(us_market_holiday(at(2015, 1, 19, 16)));   // MLK day
  CHECK(us_market_holiday(at(2015, 4, 3, 16)));    // Good Friday
  CHECK(us_market_holiday(at(2015, 7, 3, 16)));    // July 4th on a Saturday
  CHECK_FALSE(us_market_holiday(at(2014, 10, 13, 16)));  // Columbus day: markets open
  // 2014-12-26 02:00 UTC is still Christmas evening in New York.
  CHECK(us_market_holiday(at(2014, 12, 26, 2)));

  CHECK(clock_indicator(at(2014, 10, 4, 15), {ClockIndicator::Weekday}) == false);
  CHECK(clock_indicator(at(2014, 10, 1, 2), {ClockIndicator::EasternHourRange, 20, 23}));   // 22:00 EDT
  CHECK(clock_indicator(at(2014, 10, 1, 5), {ClockIndicator::EasternHourRange, 22, 2}));    // 01:00 EDT
}

TEST_CASE("composition regression: a constant indicator is rank deficient") {
  DvSet set = synthetic_set(4, 6, 100, [](Condition, int, Millis) { return 0.0; });
  for (auto& o : set.observations) o.intervention_time = 1'412'172'000'000;  // Wed 2014-10-01 14:13 UTC, open
  try {
    (void)composition_regression(set, Dv::BuyProb, 1, {});
    FAIL("expected RankDeficient");
  } catch (const RankDeficient& e) {
    const auto& cols = e.columns();
    CHECK(std::find(cols.begin(), cols.end(), "NYSE Hours") != cols.end());
  }
}

TEST_CASE("composition regression: null interaction is rarely significant") {
  // 40 clusters: p values from t(G - 1), the small-sample option.
  RegressionOptions opts;
  opts.pvalue = PValueMethod::StudentWelch;
  int rejections = 0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    const DvSet set = synthetic_set(1000 + s, 40, 150, [](Condition c, int, Millis) {
      return c == Condition::Buy ? 0.02 : 0.0;
    });
    const auto r = composition_regression(set, Dv::BuyProb, 1, {}, opts);
    if (r.p_value[r.index_of("Buy Treat.*NYSE Hours")] < 0.05) ++rejections;
  }
  MESSAGE("null interaction rejections: " << rejections << " / " << seeds);
  CHECK(rejections <= seeds / 20);
}

TEST_CASE("composition regression recovers a daytime-only effect") {
  const DvSet set = synthetic_set(77, 50, 3000, [](Condition c, int, Millis t) {
    return c == Condition::Buy && nyse_hours(t) ? 0.02 : 0.0;
  });
  const auto r = composition_regression(set, Dv::BuyProb, 1, {});
  const std::size_t i = r.index_of("Buy Treat.*NYSE Hours");
  CHECK(std::abs(r.coef[i] - 0.02) <= 2 * r.se[i]);
}

TEST_CASE("observability regression has every arm x control interaction") {
  const DvSet set = synthetic_set(8, 10, 400, [](Condition, int, Millis) { return 0.0; });
  DvSet varied = set;
  Rng rng(3);
  for (auto& o : varied.observations) o.any_trade = rng.bernoulli(0.5) ? 1.0 : 0.0;
  const auto r = observability_regression(varied, 1);
  CHECK(r.names.size() == 2 + 7 + 14);
  CHECK(r.index_of("Buy Treat.*Last Trade Buy") > 0);
  const std::size_t i = r.index_of("Sell Treat.*Log Relative Volume");
  CHECK(r.p_bonferroni[i] == std::min(1.0, 14.0 * r.p_value[i]));
}

// ---- heterogeneity ----------------------------------------------------------------

TEST_CASE("effects linear in one attribute give R^2 = 1") {
  Rng rng(6);
  std::vector<double> effects;
  std::vector<std::vector<double>> attrs;
  for (int c = 0; c < 12; ++c) {
    std::vector<double> a = {rng.lognormal(100, 1), rng.lognormal(1e5, 1), rng.uniform(1, 10)};
    effects.push_back(0.01 + 2e-5 * a[0]);
    attrs.push_back(a);
  }
  const auto r = effect_regression(effects, attrs, {"price", "volume", "spread"});
  CHECK(r.r_squared == Approx(1.0).epsilon(1e-10));
  CHECK(r.coef[0] == Approx(2e-5).epsilon(1e-8));
  CHECK_THROWS_AS((void)effect_regression(std::span(effects).first(4),
                                          std::vector<std::vector<double>>(attrs.begin(), attrs.begin() + 4),
                                          {"price", "volume", "spread"}),
                  std::invalid_argument);
}

TEST_CASE("pure-noise effects: R^2 averages 4/199") {
  Rng rng(7);
  double sum = 0.0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> effects;
    std::vector<std::vector<double>> attrs;
    for (int c = 0; c < 200; ++c) {
      effects.push_back(rng.normal());
      attrs.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    }
    sum += effect_regression(effects, attrs, {"a", "b", "c", "d"}).r_squared;
  }
  // The null R^2 is Beta(2, 97.5): mean 4/199, sd about 0.014.
  CHECK(sum / reps == Approx(4.0 / 199.0).epsilon(0.1));
}

TEST_CASE("heterogeneity analysis excludes thin coins and regresses on medians") {
  DvSet set = synthetic_set(13, 12, 120, [](Condition c, int, Millis) { return c == Condition::Buy ? 0.05 : 0.0; });
  // Coin 0 keeps a single control observation at window 1.
  bool kept = false;
  std::erase_if(set.observations, [&](const DvObservation& o) {
    if (o.coin != 0 || o.monitor != 1 || o.condition != Condition::Control) return false;
    if (!kept) {
      kept = true;
      return false;
    }
    return true;
  });
  std::vector<CoinAttributes> attrs;
  Rng rng(1);
  for (const auto& c : set.coins) {
    attrs.push_back({c, 100, rng.lognormal(1e4, 1), rng.lognormal(1e6, 1), rng.uniform(1, 50),
                     rng.lognormal(100, 1), rng.lognormal(100, 1)});
  }
  const auto h = heterogeneity_analysis(set, attrs, Dv::BuyProb, Condition::Buy, 1);
  CHECK(h.excluded == std::vector<std::string>{"C0"});
  CHECK(h.coins.size() == 11);
  CHECK(h.regression.names.size() == 6);
  CHECK(h.regression.n == 11);
  CHECK(h.regression.r_squared >= 0.0);
  CHECK(h.regression.r_squared <= 1.0);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(h.regression.p_bonferroni[i] == std::min(1.0, 5.0 * h.regression.p_value[i]));
  }
}

// ---- MWU, fat tails, binomial ------------------------------------------------------

TEST_CASE("Mann-Whitney U examples") {
  const std::vector<double> five = {5, 5, 5}, five2 = {5, 5};
  const auto tie = mwu_test(five, five2);
  CHECK(tie.u == 3.0);
  CHECK(tie.p_two_sided == 1.0);
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  const auto r = mwu_test(a, b);
  CHECK(r.u == 0.0);
  CHECK(r.z < 0.0);
  CHECK(r.z == Approx(-4.5 / std::sqrt(21.0 / 4.0)));
  CHECK(r.p_two_sided == Approx(0.0495).epsilon(0.01));
  // Ties take the mid-rank: U = 1 + 0.5 for (1, 2) vs (2, 3).
  const std::vector<double> c = {1, 2}, d = {2, 3};
  CHECK(mwu_test(c, d).u == 0.5);
}

TEST_CASE("Mann-Whitney p values are uniform under the null") {
  Rng rng(99);
  std::vector<double> ps;
  for (int rep = 0; rep < 10'000; ++rep) {
    std::vector<double> a(40), b(50);
    for (auto& v : a) v = rng.lognormal(1, 2);
    for (auto& v : b) v = rng.lognormal(1, 2);
    ps.push_back(mwu_test(a, b).p_two_sided);
  }
  const double p = testing::ks_uniform_p(ps);
  MESSAGE("KS p = " << p);
  CHECK(p > 0.01);
}

TEST_CASE("MAD over RMS") {
  Rng rng(8);
  std::vector<double> normal(1'000'000);
  for (auto& v : normal) v = rng.normal();
  CHECK(std::abs(fat_tail_ratio(normal) - std::sqrt(2.0 / M_PI)) < 0.002);
  CHECK(fat_tail_ratio(std::vector<double>{-1.0, 1.0}) == Approx(1.0));
  std::vector<double> t2(200'000);
  for (auto& v : t2) {
    const double z = rng.normal(), a = rng.normal(), b = rng.normal();
    v = z / std::sqrt((a * a + b * b) / 2.0);
  }
  CHECK(fat_tail_ratio(t2) < 0.7979);
  CHECK_THROWS_AS((void)fat_tail_ratio(std::vector<double>{2.0, 2.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)fat_tail_ratio(std::vector<double>{2.0}), std::invalid_argument);
}

TEST_CASE("binomial test") {
  CHECK(binomial_test(10, 10, 0.5) == Approx(2.0 / 1024.0).epsilon(1e-9));
  CHECK(binomial_test(5, 10, 0.5) == Approx(1.0));
  CHECK(binomial_test(0, 0, 0.3) == 1.0);
  CHECK(binomial_test(682, 925, 0.75) == Approx(0.3825).epsilon(1e-3));
  CHECK(binomial_test(3, 10, 0.5) == Approx(binomial_test(7, 10, 0.5)));
  // Above 1e5 trials the normal approximation with continuity correction is used.
  const double approx = binomial_test(100'600, 200'000, 0.5);
  CHECK(approx == Approx(normal_two_sided_p((100'600 - 100'000 - 0.5) / std::sqrt(50'000.0))).epsilon(1e-9));
  CHECK(binomial_test(66'000, 100'000, 2.0 / 3.0) < 1e-5);
}

// ---- bootstrap ----------------------------------------------------------------------

TEST_CASE("bootstrap of the mean") {
  const std::vector<double> point(50, 3.25);
  const auto mean = [](std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  for (double v : bootstrap_distribution(point, mean, 100, 1)) CHECK(v == 3.25);

  Rng rng(4);
  std::vector<double> data(1000);
  for (auto& v : data) v = rng.normal();
  const auto draws = bootstrap_distribution(data, mean, 2000, 17);
  const double m = std::accumulate(draws.begin(), draws.end(), 0.0) / 2000.0;
  double ss = 0.0;
  for (double d : draws) ss += (d - m) * (d - m);
  const double sd = std::sqrt(ss / 1999.0);
  double var = 0.0;
  const double mu = mean(data);
  for (double v : data) var += (v - mu) * (v - mu);
  const double se = std::sqrt(var / 999.0 / 1000.0);
  CHECK(std::abs(sd / se - 1.0) < 0.1);

  CHECK(bootstrap_distribution(data, mean, 50, 17) == bootstrap_distribution(data, mean, 50, 17, 3));
  CHECK(bootstrap_distribution(data, mean, 50, 17) != bootstrap_distribution(data, mean, 50, 18));
}

TEST_CASE("effect bootstrap is seeded and centred on the table") {
  std::vector<TrialRecord> trials;
  Rng rng(12);
  for (std::uint64_t i = 1; i <= 3000; ++i) {
    const auto c = static_cast<Condition>(rng.uniform_int(0, 2));
    std::array<MonitorRecord, 3> m;
    for (auto& x : m) {
      if (rng.bernoulli(0.5)) {
        x = quiet();
      } else {
        const double p = c == Condition::Buy ? 0.4 : 0.3;
        const bool buy = rng.bernoulli(p);
        x = monitor(buy ? rng.uniform_int(1, 100) : 0, buy ? 0 : rng.uniform_int(1, 100), buy ? Side::Buy : Side::Sell);
      }
    }
    trials.push_back(trial(i, "C" + std::to_string(i % 7), c, m));
  }
  BootstrapOptions o;
  o.replicates = 300;
  o.seed = 5;
  const auto a = bootstrap_effects(trials, o);
  CHECK(a.columns.size() == 36);
  CHECK(a.columns[0] == "15 Min. Buy Buy Prob. effect");
  CHECK(a.columns[1] == "15 Min. Buy Buy Prob. t");
  o.threads = 3;
  const auto b = bootstrap_effects(trials, o);
  CHECK(a.samples == b.samples);

  const EffectTable table = build_effect_table(extract_dvs(trials));
  for (std::size_t c = 0; c < 18; ++c) {
    double m = 0.0;
    for (const auto& row : a.samples) m += row[2 * c];
    m /= 300.0;
    const double se = table.rows[c].result.mean_effect / table.rows[c].result.t_stat;
    CHECK(std::abs(m - table.rows[c].result.mean_effect) < 0.25 * std::abs(se));
  }
  o.coin_blocks = true;
  const auto blocks = bootstrap_effects(trials, o);
  CHECK(blocks.samples.size() == 300);
  CHECK(blocks.samples != a.samples);

  std::ostringstream out;
  write_bootstrap_csv(out, a);
  CHECK(out.str().rfind("replicate,15 Min. Buy Buy Prob. effect,15 Min. Buy Buy Prob. t,", 0) == 0);
}

// ---- reports --------------------------------------------------------------------------

TEST_CASE("volume accounting") {
  CHECK(volume_ratio(1513, 1430, 0.14) == Approx(592.857).epsilon(1e-5));
  CHECK(volume_ratio(0, 0, 0) == 0.0);

  std::vector<TrialRecord> zero = {trial(1, "A", Condition::Buy, {quiet(), quiet(), quiet()}),
                                   trial(2, "A", Condition::Control, {quiet(), quiet(), quiet()})};
  zero[0].trade_size = 0;
  const auto z = volume_accounting(extract_dvs(zero));
  CHECK(z.effect == 0.0);
  CHECK(z.ratio == 0.0);

  const std::vector<TrialRecord> trials = {
      trial(1, "A", Condition::Buy, {monitor(300, 5, Side::Buy), monitor(1000, 0, Side::Buy), quiet()}),
      trial(2, "B", Condition::Buy, {monitor(200, 0, Side::Buy), quiet(), quiet()}),
      trial(3, "A", Condition::Sell, {monitor(70, 0, Side::Buy), quiet(), quiet()}),
      trial(4, "B", Condition::Control, {monitor(100, 9, Side::Sell), quiet(), quiet()}),
      trial(5, "A", Condition::Control, {monitor(50, 0, Side::Buy), quiet(), quiet()}),
  };
  const auto v = volume_accounting(extract_dvs(trials));
  CHECK(v.buy_volume == std::array<Notional, 3>{500, 70, 150});
  CHECK(v.trials == std::array<std::uint64_t, 3>{2, 1, 2});
  CHECK(v.effect == 350.0);
  CHECK(v.intervention_cost == 200);
  CHECK(v.ratio == 1.75);
  CHECK(v.mwu.u == 4.0);
}

TEST_CASE("randomization report") {
  std::vector<TrialRecord> trials;
  Rng rng(21);
  for (std::uint64_t i = 1; i <= 60'000; ++i) {
    auto t = trial(i, "C" + std::to_string(i % 5), static_cast<Condition>(rng.uniform_int(0, 2)),
                   {quiet(), quiet(), quiet()});
    t.pre_state = random_controls(rng);
    // Five percent of treatments fail to execute.
    if (t.condition != Condition::Control && rng.bernoulli(0.05)) t.intervened = false;
    trials.push_back(t);
  }
  const auto r = randomization_report(trials);
  CHECK(r.assigned[0] + r.assigned[1] + r.assigned[2] == 60'000);
  const auto treated = r.analysed[0] + r.analysed[1];
  CHECK(r.p_treated_share == binomial_test(treated, treated + r.analysed[2], 2.0 / 3.0));
  CHECK(r.p_buy_vs_control == binomial_test(r.analysed[0], r.analysed[0] + r.analysed[2], 0.5));
  CHECK(r.analysed[2] == r.assigned[2]);
  CHECK(r.analysed[0] < r.assigned[0]);
  CHECK(r.p_treated_share < 1e-5);
  CHECK(r.balance.size() == 14);
  for (const auto& b : r.balance) CHECK(b.result.n_treat > 18'000);
  CHECK(r.per_coin.size() == 5);
  std::ostringstream out;
  write_per_coin_csv(out, r);
  CHECK(out.str().rfind("coin,assigned_buy,assigned_sell,assigned_control,analysed_buy,analysed_sell,analysed_control\nC0,",
                        0) == 0);
}

TEST_CASE("impact rates come from the pre-trade quotes") {
  std::vector<TrialRecord> trials = {
      trial(1, "A", Condition::Buy, {quiet(), quiet(), quiet()}),
      trial(2, "A", Condition::Buy, {quiet(), quiet(), quiet()}),
      trial(3, "A", Condition::Sell, {quiet(), quiet(), quiet()}),
      trial(4, "A", Condition::Control, {monitor(1, 0, Side::Buy), quiet(), quiet()}),
      trial(5, "A", Condition::Control, {quiet(), quiet(), quiet()}),
  };
  trials[0].pre_state.best_sell = QuoteVsLast::Above;
  trials[1].pre_state.best_sell = QuoteVsLast::At;
  trials[2].pre_state.best_buy = QuoteVsLast::Below;
  const auto p = impact_rates(trials);
  CHECK(p.buy_raises == 0.5);
  CHECK(p.sell_lowers == 1.0);
  CHECK(p.any_trade_15 == 0.5);
}
