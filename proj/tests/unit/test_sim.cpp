#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "cdalab/sim/descriptive.hpp"
#include "cdalab/sim/engine.hpp"

using namespace cdalab;

namespace {

AgentSpec zi_spec(double rate, std::uint32_t count = 1) {
  AgentSpec s;
  s.label = "zi";
  s.count = count;
  s.config.arrival_rate = rate;
  s.config.initial_holdings_value = 200'000;
  s.config.zi.size_median = 2'000;
  return s;
}

SimConfig small_config(std::uint32_t coins, double hours) {
  SimConfig c;
  c.coins = coins;
  c.duration = static_cast<Millis>(hours * static_cast<double>(kHour));
  c.seed = 7;
  c.activity_sigma = 0.0;
  return c;
}

Notional brute_force_volume(const EventLog& log, CoinId coin, Millis from, Millis to) {
  Notional v = 0;
  for (const Trade& t : log.trades) {
    if (t.coin == coin && t.timestamp > from && t.timestamp <= to) v += notional(t.price, t.quantity);
  }
  return v;
}

}  // namespace

TEST_CASE("zero agents produce an empty trade log") {
  Simulation sim(small_config(3, 48));
  sim.run();
  const EventLog log = sim.event_log();
  CHECK(log.trades.empty());
  CHECK(log.arrivals == 0);
}

TEST_CASE("same seed gives identical logs") {
  auto cfg = small_config(4, 24);
  cfg.agents = {zi_spec(20, 3)};
  cfg.record_orders = true;
  Simulation a(cfg), b(cfg);
  a.run();
  b.run();
  const auto la = a.event_log(), lb = b.event_log();
  REQUIRE(!la.trades.empty());
  CHECK(la.trades == lb.trades);
  std::ostringstream oa, ob;
  write_order_events(oa, la.orders, la.coin_names);
  write_order_events(ob, lb.orders, lb.coin_names);
  CHECK(oa.str() == ob.str());

  cfg.seed = 8;
  Simulation c(cfg);
  c.run();
  CHECK(c.event_log().trades != la.trades);
}

TEST_CASE("one agent at 10 per hour for 100 hours arrives 1000 +- 100 times") {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto cfg = small_config(1, 100);
    cfg.seed = seed;
    cfg.agents = {zi_spec(10)};
    Simulation sim(cfg);
    sim.run();
    CHECK(sim.arrivals() >= 900);
    CHECK(sim.arrivals() <= 1100);
  }
}

TEST_CASE("snapshot last trade fields") {
  auto cfg = small_config(2, 1);
  cfg.price_median = 99;
  cfg.price_sigma = 0;
  Simulation sim(cfg);
  const auto before = sim.snapshot(0);
  CHECK_FALSE(before.last_price.has_value());
  CHECK_FALSE(before.last_trade_side.has_value());
  REQUIRE(sim.book(0).best_ask() == Price{100});

  sim.schedule(0, cfg.start_time + kMinute, [&] { sim.execute_market_order(0, Side::Buy, 1, kExternalOwnerBase); });
  sim.run();
  const auto after = sim.snapshot(0);
  CHECK(after.last_price == Price{100});
  CHECK(after.last_trade_side == Side::Buy);
  CHECK(before.trades.empty());
  CHECK_FALSE(before.last_price.has_value());
  CHECK_FALSE(sim.snapshot(1).last_price.has_value());
  CHECK_THROWS_AS((void)sim.snapshot(2), std::out_of_range);
}

TEST_CASE("snapshot volumes match a brute-force rescan and snapshots are immutable") {
  auto cfg = small_config(3, 30);
  cfg.agents = {zi_spec(30, 2)};
  Simulation sim(cfg);
  struct Taken {
    MarketSnapshot snap;
    std::vector<Trade> copy;
  };
  std::vector<Taken> taken;
  for (CoinId c = 0; c < 3; ++c) {
    for (int h = 1; h < 30; h += 3) {
      sim.schedule(c, cfg.start_time + h * kHour + 17 * kMinute + c, [&sim, &taken, c] {
        auto s = sim.snapshot(c, sim.now(c) - 2 * kHour);
        taken.push_back({s, s.trades});
      });
    }
  }
  sim.run();
  const auto log = sim.event_log();
  REQUIRE(taken.size() == 30);
  for (const auto& [snap, copy] : taken) {
    CHECK(snap.trades == copy);
    CHECK(snap.hourly_volume == brute_force_volume(log, snap.coin, snap.now - kHour, snap.now));
    for (Millis back : {Millis{0}, 10 * kMinute, kHour, 2 * kHour}) {
      const Millis t = snap.now - back;
      std::vector<Trade> expected;
      for (const Trade& tr : log.trades) {
        if (tr.coin == snap.coin && tr.timestamp > t && tr.timestamp <= snap.now) expected.push_back(tr);
      }
      const auto got = snap.trades_since(t);
      CHECK(std::vector<Trade>(got.begin(), got.end()) == expected);
    }
    CHECK_THROWS_AS((void)snap.trades_since(snap.now - 3 * kHour), std::out_of_range);
  }
}

TEST_CASE("processed timestamps never decrease") {
  auto cfg = small_config(2, 10);
  cfg.agents = {zi_spec(40)};
  Simulation sim(cfg);
  std::vector<Millis> seen;
  std::function<void()> tick = [&] {
    seen.push_back(sim.now(0));
    if (sim.now(0) + 7 * kMinute <= cfg.end_time()) sim.schedule(0, sim.now(0) + 7 * kMinute, tick);
  };
  sim.schedule(0, cfg.start_time + kMinute, tick);
  sim.schedule(0, cfg.start_time + kMinute, [&] { seen.push_back(sim.now(0)); });
  sim.run();
  CHECK(seen.size() > 80);
  CHECK(std::is_sorted(seen.begin(), seen.end()));
  const auto log = sim.event_log();
  CHECK(std::is_sorted(log.trades.begin(), log.trades.end(),
                       [](const Trade& a, const Trade& b) { return a.timestamp < b.timestamp; }));
}

TEST_CASE("parallel workers reproduce the single-threaded run") {
  auto cfg = small_config(6, 24);
  cfg.activity_sigma = 1.0;
  AgentSpec copy = zi_spec(10);
  copy.label = "copy";
  copy.config.kind = AgentKind::CopyTrader;
  copy.config.theta = 0.3;
  cfg.agents = {zi_spec(20, 2), copy};
  Simulation one(cfg), many(cfg);
  CHECK(one.permits_parallel_coins());
  one.run(1);
  many.run(3);
  CHECK(one.event_log().trades == many.event_log().trades);
}

TEST_CASE("saliency traders force a single global queue") {
  auto cfg = small_config(5, 24);
  AgentSpec sal = zi_spec(40, 4);
  sal.label = "sal";
  sal.config.kind = AgentKind::SaliencyTrader;
  sal.config.theta = 0.5;
  cfg.agents = {zi_spec(10), sal};
  Simulation a(cfg), b(cfg);
  CHECK_FALSE(a.permits_parallel_coins());
  a.run(1);
  b.run(4);
  CHECK(a.event_log().trades == b.event_log().trades);
  CHECK(a.agent_count() == 5 + 4);
}

TEST_CASE("agents never hold negative quantities") {
  auto cfg = small_config(4, 48);
  cfg.activity_sigma = 0.8;
  AgentSpec copy = zi_spec(15, 2);
  copy.label = "copy";
  copy.config.kind = AgentKind::CopyTrader;
  copy.config.theta = 0.5;
  copy.config.initial_holdings_value = 0;
  AgentSpec mom = copy;
  mom.label = "mom";
  mom.config.kind = AgentKind::MomentumTrader;
  cfg.agents = {zi_spec(30, 2), copy, mom};
  Simulation sim(cfg);
  for (int h = 1; h < 48; ++h) {
    sim.schedule(0, cfg.start_time + h * kHour, [&] {
      for (std::size_t a = 0; a < sim.agent_count(); ++a) {
        for (CoinId c = 0; c < 4; ++c) {
          if (sim.agent_spec(a).config.kind != AgentKind::SaliencyTrader && c > 0) break;
          REQUIRE(sim.agent_holdings(a, c) >= 0);
        }
      }
    });
  }
  sim.run();
  for (std::size_t a = 0; a < sim.agent_count(); ++a) CHECK(sim.agent_holdings(a, 0) >= 0);
}

TEST_CASE("copy traders make consecutive trades share a side more often as theta rises") {
  auto same_side_fraction = [](double theta) {
    auto cfg = small_config(20, 72);
    AgentSpec copy = zi_spec(20, 2);
    copy.label = "copy";
    copy.config.kind = AgentKind::CopyTrader;
    copy.config.theta = theta;
    copy.config.lookback = 30 * kMinute;
    cfg.agents = {zi_spec(20, 2), copy};
    Simulation sim(cfg);
    sim.run();
    double same = 0, pairs = 0;
    for (CoinId c = 0; c < 20; ++c) {
      const auto trades = sim.book(c).trade_history();
      for (std::size_t i = 1; i < trades.size(); ++i) {
        pairs += 1;
        same += trades[i].taker_side == trades[i - 1].taker_side ? 1 : 0;
      }
    }
    return same / pairs;
  };
  const double f0 = same_side_fraction(0.0), f5 = same_side_fraction(0.5), f9 = same_side_fraction(0.9);
  CHECK(f0 < f5);
  CHECK(f5 < f9);
}

TEST_CASE("descriptive stats of a single trade") {
  EventLog log;
  log.coin_names = {"AAA"};
  log.start_time = 0;
  log.end_time = kDay;
  log.trades.push_back(Trade{0, Price{100}, 1, Side::Buy, 5 * kHour, 1, 1, 2});
  const auto s = describe(log);
  REQUIRE(s.daily_volume.size() == 2);  // end_time is the start of the next day
  CHECK(s.daily_volume[0] == 100);
  CHECK(s.trade_size_histogram.counts.size() == 1);
  CHECK(s.trade_size_histogram.counts[0] == 1);
  CHECK(s.coin_volume_histogram.counts.size() == 1);
  CHECK(s.hour_of_day_volume[5] == doctest::Approx(100.0));
  CHECK_THROWS_AS((void)describe(EventLog{}), std::invalid_argument);
}

TEST_CASE("hour-of-day means divide by the hours each slot was observed") {
  EventLog log;
  log.coin_names = {"AAA"};
  log.start_time = 10 * kDay;
  log.end_time = 10 * kDay + kHour + kHour / 2;
  log.trades.push_back(Trade{0, Price{100}, 3, Side::Buy, 10 * kDay + 10 * kMinute, 1, 1, 2});
  log.trades.push_back(Trade{0, Price{100}, 1, Side::Sell, 10 * kDay + 70 * kMinute, 2, 1, 2});
  const auto s = describe(log);
  CHECK(s.hour_of_day_volume[0] == doctest::Approx(300.0));
  CHECK(s.hour_of_day_volume[1] == doctest::Approx(200.0));  // 100 in half an hour
  CHECK(s.hour_of_day_volume[2] == 0.0);
}

TEST_CASE("trades-per-hour estimator recovers k on a constant-size log") {
  for (int k : {1, 3, 12}) {
    EventLog log;
    log.coin_names = {"AAA", "BBB"};
    log.start_time = 1'000 * kDay;
    log.end_time = log.start_time + 10 * kHour;
    for (int h = 0; h < 10; ++h) {
      for (int j = 0; j < k; ++j) {
        log.trades.push_back(Trade{0, Price{40}, 5, Side::Sell, log.start_time + h * kHour + j * 1000 + 1, 0, 1, 2});
      }
    }
    const auto s = describe(log);
    CHECK(s.coin_trades_per_hour[0] == doctest::Approx(k).epsilon(1e-12));
    CHECK(s.coin_trades_per_hour[1] == 0.0);
  }
}

TEST_CASE("log histogram and kurtosis") {
  const std::vector<double> v = {1, 10, 100, 1000, 10000};
  const auto h = log_histogram(v, 4);
  REQUIRE(h.counts.size() == 4);
  CHECK(h.counts[0] == 1);
  CHECK(h.counts[3] == 2);
  CHECK(excess_kurtosis({1, 2, 3, 4}) == doctest::Approx(-1.36));
  CHECK(excess_kurtosis({1, 1, 1, 1, 1, 1, 1, 1, 1, 100}) > 0.0);
}

TEST_CASE("heterogeneous activity gives a fat-tailed per-coin volume distribution") {
  auto cfg = small_config(60, 24);
  cfg.activity_sigma = 1.0;
  cfg.agents = {zi_spec(10, 2)};
  Simulation sim(cfg);
  sim.run();
  const auto s = describe(sim.event_log());
  CHECK(s.coin_volume_excess_kurtosis > 0.0);
  std::ostringstream out;
  write_coin_volume_csv(out, s, sim.coin_names());
  CHECK(out.str().rfind("coin,trades,volume,trades_per_hour\nC000,", 0) == 0);
}
