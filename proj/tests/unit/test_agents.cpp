#include <doctest.h>

#include <map>
#include <string>

#include "cdalab/agents/agent.hpp"
#include "support/stat_helpers.hpp"

using namespace cdalab;

namespace {

MarketView typical_view() {
  MarketView v;
  v.coin = 0;
  v.now = 10 * kHour;
  v.best_bid = Price{99};
  v.best_ask = Price{101};
  v.last_price = Price{100};
  v.last_trade_side = Side::Buy;
  v.last_trade_time = v.now - kMinute;
  v.price_at_lookback = Price{100};
  v.reference = Price{100};
  v.holdings = 1'000'000;
  return v;
}

std::string category(const AgentDecision& d) {
  if (d.none()) return "none";
  const auto& o = *d.order;
  std::string s = o.side == Side::Buy ? "buy" : "sell";
  s += o.tif == TimeInForce::ImmediateOrCancel ? "-take" : "-make";
  return s + "@" + std::to_string(o.coin);
}

template <typename Step>
std::map<std::string, double> tally(Step step, std::uint64_t seed, int n) {
  Rng rng(seed);
  std::map<std::string, double> counts;
  for (int i = 0; i < n; ++i) counts[category(step(rng))] += 1;
  return counts;
}

}  // namespace

TEST_CASE("inactive arrival yields no order") {
  AgentConfig cfg;
  cfg.zi.activity = 0.0;
  Rng rng(1);
  CHECK(zi_step(typical_view(), rng, cfg).none());
}

TEST_CASE("sell draw with zero holdings and no short selling yields no order") {
  AgentConfig cfg;
  cfg.zi.buy_propensity = 0.0;
  MarketView v = typical_view();
  v.holdings = 0;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) CHECK(zi_step(v, rng, cfg).none());
}

TEST_CASE("sell orders never exceed holdings") {
  AgentConfig cfg;
  cfg.zi.buy_propensity = 0.2;
  cfg.theta = 0.7;
  Rng rng(3);
  for (int i = 0; i < 20000; ++i) {
    MarketView v = typical_view();
    v.holdings = rng.uniform_int(0, 400);
    v.last_trade_side = rng.bernoulli(0.5) ? Side::Buy : Side::Sell;
    v.price_at_lookback = Price{rng.uniform_int(98, 102)};
    for (auto d : {zi_step(v, rng, cfg), copy_step(v, rng, cfg), momentum_step(v, rng, cfg)}) {
      if (!d.none() && d.order->side == Side::Sell) {
        REQUIRE(d.order->quantity <= v.holdings);
        REQUIRE(d.order->quantity > 0);
      }
    }
  }
}

TEST_CASE("long-run ZI buy fraction matches the configured propensity") {
  AgentConfig cfg;
  cfg.zi.buy_propensity = 0.28;
  Rng rng(4);
  int buys = 0, orders = 0;
  for (int i = 0; i < 100000; ++i) {
    auto d = zi_step(typical_view(), rng, cfg);
    if (d.none()) continue;
    ++orders;
    buys += d.order->side == Side::Buy;
  }
  CHECK(orders == 100000);
  CHECK(static_cast<double>(buys) / orders == doctest::Approx(0.28).epsilon(0.01 / 0.28));
}

TEST_CASE("passive orders never cross and marketable orders do") {
  AgentConfig cfg;
  cfg.zi.max_slippage_ticks = 2;
  Rng rng(5);
  const MarketView v = typical_view();
  for (int i = 0; i < 10000; ++i) {
    auto d = zi_step(v, rng, cfg);
    REQUIRE_FALSE(d.none());
    const auto& o = *d.order;
    if (o.tif == TimeInForce::GoodTillExpiry) {
      if (o.side == Side::Buy) CHECK(o.price < *v.best_ask);
      if (o.side == Side::Sell) CHECK(o.price > *v.best_bid);
      CHECK(o.ttl > 0);
    } else {
      if (o.side == Side::Buy) CHECK(o.price >= *v.best_ask);
      if (o.side == Side::Sell) CHECK(o.price <= *v.best_bid);
    }
    CHECK(notional(o.price, o.quantity) >= v.min_order_value);
  }
}

TEST_CASE("copy trader with theta 1 copies the last buy") {
  AgentConfig cfg;
  cfg.kind = AgentKind::CopyTrader;
  cfg.theta = 1.0;
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    auto d = copy_step(typical_view(), rng, cfg);
    REQUIRE_FALSE(d.none());
    CHECK(d.order->side == Side::Buy);
    CHECK(d.order->tif == TimeInForce::ImmediateOrCancel);
  }
}

TEST_CASE("copy trader ignores trades older than its lookback") {
  AgentConfig cfg;
  cfg.theta = 1.0;
  cfg.zi.activity = 0.0;
  MarketView v = typical_view();
  v.last_trade_time = v.now - cfg.lookback - 1;
  Rng rng(7);
  CHECK(copy_step(v, rng, cfg).none());
}

TEST_CASE("copy frequency at theta 0.3 is 0.30 +- 0.01") {
  AgentConfig cfg;
  cfg.theta = 0.3;
  cfg.zi.activity = 0.0;  // isolates the copy path
  Rng rng(8);
  int copies = 0;
  for (int i = 0; i < 100000; ++i) {
    auto d = copy_step(typical_view(), rng, cfg);
    if (!d.none() && d.order->side == Side::Buy) ++copies;
  }
  CHECK(std::abs(copies / 1e5 - 0.30) <= 0.01);
}

TEST_CASE("momentum: falling prices and a buy-only variant yield no order") {
  AgentConfig cfg;
  cfg.kind = AgentKind::MomentumTrader;
  cfg.theta = 1.0;
  cfg.buy_only = true;
  MarketView v = typical_view();
  v.last_price = Price{95};
  v.price_at_lookback = Price{100};
  Rng rng(9);
  for (int i = 0; i < 100; ++i) CHECK(momentum_step(v, rng, cfg).none());
}

TEST_CASE("momentum: a flat series takes the ZI fallback path") {
  AgentConfig cfg;
  cfg.theta = 1.0;
  MarketView v = typical_view();
  v.price_at_lookback = v.last_price;
  auto mom = tally([&](Rng& r) { return momentum_step(v, r, cfg); }, 10, 20000);
  auto zi = tally([&](Rng& r) { return zi_step(v, r, cfg); }, 11, 20000);
  CHECK(testing::chi_square_homogeneity_p(mom, zi) > 0.01);
  CHECK(mom.count("sell-make@0") == 1);  // a rule-only path would never sell here
}

TEST_CASE("momentum buy frequency on a rising series at theta 0.5") {
  AgentConfig cfg;
  cfg.theta = 0.5;
  cfg.zi.activity = 0.0;
  MarketView v = typical_view();
  v.last_price = Price{103};
  v.price_at_lookback = Price{100};
  Rng rng(12);
  int buys = 0;
  for (int i = 0; i < 100000; ++i) {
    auto d = momentum_step(v, rng, cfg);
    if (!d.none() && d.order->side == Side::Buy) ++buys;
  }
  CHECK(std::abs(buys / 1e5 - 0.50) <= 0.01);
}

TEST_CASE("theta 0 reduces every behavioural agent to the ZI distribution") {
  AgentConfig cfg;
  cfg.theta = 0.0;
  const MarketView v = typical_view();
  const int n = 20000;
  auto zi = tally([&](Rng& r) { return zi_step(v, r, cfg); }, 100, n);
  auto copy = tally([&](Rng& r) { return copy_step(v, r, cfg); }, 101, n);
  MarketView rising = v;
  rising.last_price = Price{104};
  auto mom = tally([&](Rng& r) { return momentum_step(rising, r, cfg); }, 102, n);
  CHECK(testing::chi_square_homogeneity_p(zi, copy) > 0.01);
  CHECK(testing::chi_square_homogeneity_p(zi, mom) > 0.01);

  std::vector<MarketView> markets(3, v);
  for (CoinId c = 0; c < 3; ++c) {
    markets[c].coin = c;
    markets[c].recent_trades = 10 * c;
  }
  auto sal = tally([&](Rng& r) { return saliency_step(markets, r, cfg); }, 103, n);
  auto uniform_zi = tally(
      [&](Rng& r) {
        const auto idx = static_cast<std::size_t>(r.uniform_int(0, 2));
        return zi_step(markets[idx], r, cfg);
      },
      104, n);
  CHECK(testing::chi_square_homogeneity_p(sal, uniform_zi) > 0.01);
}

TEST_CASE("saliency coin choice") {
  std::vector<MarketView> markets(4);
  Rng rng(13);

  SUBCASE("no recent trades anywhere gives a uniform choice") {
    std::map<std::size_t, double> counts;
    for (int i = 0; i < 40000; ++i) counts[choose_salient(markets, 1.0, rng)] += 1;
    std::map<std::size_t, double> expected{{0, 10000}, {1, 10000}, {2, 10000}, {3, 10000}};
    CHECK(testing::chi_square_homogeneity_p(counts, expected) > 0.01);
  }
  SUBCASE("without smoothing only the active coin is chosen") {
    markets[2].recent_trades = 9;
    for (int i = 0; i < 1000; ++i) CHECK(choose_salient(markets, 0.0, rng) == 2);
  }
  SUBCASE("weights are trade count plus smoothing") {
    std::vector<MarketView> two(2);
    two[0].recent_trades = 3;
    two[1].recent_trades = 1;
    int first = 0;
    for (int i = 0; i < 100000; ++i) first += choose_salient(two, 1.0, rng) == 0;
    CHECK(std::abs(first / 1e5 - 4.0 / 6.0) <= 0.01);

    two[0].recent_trades = 4;
    first = 0;
    for (int i = 0; i < 100000; ++i) first += choose_salient(two, 1.0, rng) == 0;
    CHECK(std::abs(first / 1e5 - 5.0 / 7.0) <= 0.01);
  }
}

TEST_CASE("config validation") {
  AgentConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.theta = 1.5;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.theta = 0.5;
  cfg.arrival_rate = 0;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  CHECK(parse_agent_kind("copy") == AgentKind::CopyTrader);
  CHECK_THROWS_AS(parse_agent_kind("whale"), std::invalid_argument);
}
