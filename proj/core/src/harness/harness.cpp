#include "cdalab/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "cdalab/error.hpp"
#include "cdalab/text.hpp"

namespace cdalab {

namespace {

QuoteVsLast compare(std::optional<Price> quote, Price last, QuoteVsLast if_absent) {
  if (!quote) return if_absent;
  if (*quote > last) return QuoteVsLast::Above;
  if (*quote < last) return QuoteVsLast::Below;
  return QuoteVsLast::At;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

template <typename F>
auto with_one_retry(F&& call) -> std::optional<decltype(call())> {
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return call();
    } catch (const ExchangeError& e) {
      if (e.kind() != ExchangeErrorKind::ApiUnavailable) throw;
    }
  }
  return std::nullopt;
}

struct Bot {
  Exchange& ex;
  const HarnessConfig& cfg;
  CoinId coin;
  OwnerId own;
  std::string name;
  Rng rng;
  std::vector<TrialRecord> trials;
  ExperimentSummary summary;
  std::vector<double> prices, volumes, spreads, sell_sizes, buy_sizes;

  Millis gap() { return rng.uniform_int(0, cfg.max_gap); }

  void schedule_attempt(Millis at) {
    ex.schedule(coin, at, [this] { attempt(); });
  }

  bool peer_trade_in_last_hour(const MarketSnapshot& s) const {
    for (const Trade& t : s.trades_since(s.now - kHour)) {
      if (t.taker_owner != own) return true;
    }
    return false;
  }

  void attempt() {
    const Millis t = ex.now(coin);
    if (t + kMonitorBounds.back() > ex.end_time()) return;
    ++summary.attempts;
    const auto state = with_one_retry([&] { return ex.get_market_state(coin, t - kHour); });
    if (!state) {
      ++summary.state_read_failures;
      schedule_attempt(t + gap());
      return;
    }
    const MarketSnapshot& s = *state;
    if (!peer_trade_in_last_hour(s)) {
      ++summary.ineligible_no_trade;
      schedule_attempt(t + gap());
      return;
    }
    if (!cfg.control_only) {
      const Balance b = ex.balance(coin);
      const Notional sell_value = s.best_bid ? notional(*s.best_bid, b.coin) : 0;
      if (b.base < cfg.min_tradeable_value || sell_value < cfg.min_tradeable_value) {
        ++summary.ineligible_funds;
        schedule_attempt(t + gap());
        return;
      }
    }

    // Both draws happen on every trial so that arms share random numbers.
    const auto arm = static_cast<Condition>(rng.uniform_int(0, 2));
    const Notional size = rng.uniform_int(cfg.min_trade_size, cfg.max_trade_size);

    TrialRecord r;
    r.coin = name;
    r.condition = cfg.control_only ? Condition::Control : arm;
    r.intervention_time = t;
    r.pre_state = market_state_controls(s, own);
    if (r.condition != Condition::Control) {
      r.trade_size = size;
      const Side side = r.condition == Condition::Buy ? Side::Buy : Side::Sell;
      const auto& quote = side == Side::Buy ? s.best_ask : s.best_bid;
      if (quote) {
        const Quantity lots = std::max<Quantity>(1, std::llround(static_cast<double>(size) / quote->units));
        try {
          r.intervened = ex.place_order(coin, side, lots).filled > 0;
        } catch (const ExchangeError&) {
          r.intervened = false;
        }
      }
      if (!r.intervened) ++summary.failures_to_treat;
    }

    if (s.last_price) prices.push_back(static_cast<double>(s.last_price->units));
    volumes.push_back(static_cast<double>(r.pre_state.prev_hour_volume));
    if (s.best_bid && s.best_ask) spreads.push_back(static_cast<double>(s.best_ask->units - s.best_bid->units));
    if (s.best_ask) sell_sizes.push_back(static_cast<double>(s.best_ask_size));
    if (s.best_bid) buy_sizes.push_back(static_cast<double>(s.best_bid_size));

    const std::size_t idx = trials.size();
    trials.push_back(std::move(r));
    for (std::size_t k = 0; k < 3; ++k) {
      ex.schedule(coin, t + kMonitorBounds[k + 1], [this, idx, k, from = t + kMonitorBounds[k]] {
        MonitorRecord m = record_monitor(ex, coin, from);
        if (m.missing) ++summary.missing_monitors;
        trials[idx].monitors[k] = m;
      });
    }
    schedule_attempt(t + kMonitorBounds.back() + gap());
  }
};

}  // namespace

MarketStateControls market_state_controls(const MarketSnapshot& s, OwnerId own) {
  MarketStateControls c;
  if (s.last_price) {
    c.best_buy = compare(s.best_bid, *s.last_price, QuoteVsLast::Below);
    c.best_sell = compare(s.best_ask, *s.last_price, QuoteVsLast::Above);
  }
  c.last_trade_was_buy = s.last_trade_side == Side::Buy;
  Notional buy = 0, total = 0;
  for (const Trade& t : s.trades_since(s.now - kHour)) {
    if (t.taker_owner == own) continue;
    const Notional v = notional(t.price, t.quantity);
    total += v;
    if (t.taker_side == Side::Buy) buy += v;
  }
  c.prev_hour_volume = total;
  c.pct_buy_volume_prev_hour = total > 0 ? static_cast<double>(buy) / static_cast<double>(total) : 0.0;
  if (total > 0 && s.average_hourly_volume > 0.0) {
    c.log_relative_volume = std::log(static_cast<double>(total) / s.average_hourly_volume);
  }
  return c;
}

MonitorRecord record_monitor(Exchange& exchange, CoinId coin, Millis from) {
  MonitorRecord m;
  const auto state = with_one_retry([&] { return exchange.get_market_state(coin, from); });
  if (!state) {
    m.missing = true;
    return m;
  }
  const OwnerId own = exchange.bot_owner(coin);
  for (const Trade& t : state->trades_since(from)) {
    if (t.taker_owner == own) continue;
    const Notional v = notional(t.price, t.quantity);
    (t.taker_side == Side::Buy ? m.buy_volume : m.sell_volume) += v;
    ++m.trade_count;
    m.last_trade_side = t.taker_side;
  }
  m.any_trade = m.trade_count > 0;
  return m;
}

ExperimentResult run_experiment(Exchange& exchange, const HarnessConfig& cfg, unsigned threads) {
  if (!cfg.control_only && !exchange.supports_orders()) {
    throw std::invalid_argument(
        "this backend is read-only and cannot execute treatments; use control-only observational mode");
  }
  if (cfg.initial_wait_min < 0 || cfg.initial_wait_max < cfg.initial_wait_min || cfg.max_gap < 0) {
    throw std::invalid_argument("invalid harness waits");
  }
  if (cfg.min_trade_size < 1 || cfg.max_trade_size < cfg.min_trade_size) {
    throw std::invalid_argument("invalid trade size range");
  }

  const std::uint32_t coins = exchange.coin_count();
  std::vector<std::unique_ptr<Bot>> bots;
  bots.reserve(coins);
  for (CoinId c = 0; c < coins; ++c) {
    bots.push_back(std::make_unique<Bot>(Bot{exchange, cfg, c, exchange.bot_owner(c), exchange.coin_names()[c],
                                             Rng(derive_seed(cfg.seed, Stream::Harness, {c})), {}, {}, {}, {}, {},
                                             {}, {}}));
    Bot& bot = *bots.back();

    // Opening purchase of the coin at the current best price, credited directly.
    Balance funding{cfg.base_funding, 0};
    for (int attempt = 0; attempt < 10; ++attempt) {
      try {
        const auto s = exchange.get_market_state(c, exchange.now(c));
        const auto ref = s.best_ask ? s.best_ask : s.last_price ? s.last_price : s.best_bid;
        if (ref) funding.coin = cfg.coin_funding_value / ref->units;
        break;
      } catch (const ExchangeError& e) {
        if (e.kind() != ExchangeErrorKind::ApiUnavailable) throw;
      }
    }
    exchange.fund(c, funding);
    bot.schedule_attempt(exchange.now(c) + bot.rng.uniform_int(cfg.initial_wait_min, cfg.initial_wait_max));
  }

  exchange.run(threads);

  ExperimentResult result;
  for (auto& bot : bots) {
    for (auto& t : bot->trials) result.trials.push_back(std::move(t));
    auto& s = result.summary;
    s.attempts += bot->summary.attempts;
    s.ineligible_no_trade += bot->summary.ineligible_no_trade;
    s.ineligible_funds += bot->summary.ineligible_funds;
    s.state_read_failures += bot->summary.state_read_failures;
    s.failures_to_treat += bot->summary.failures_to_treat;
    s.missing_monitors += bot->summary.missing_monitors;

    CoinAttributes a;
    a.coin = bot->name;
    a.observations = bot->volumes.size();
    a.price = median(bot->prices);
    a.volume = median(bot->volumes);
    a.spread = median(bot->spreads);
    a.best_sell_size = median(bot->sell_sizes);
    a.best_buy_size = median(bot->buy_sizes);
    result.coin_attributes.push_back(std::move(a));
  }
  std::stable_sort(result.trials.begin(), result.trials.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return a.intervention_time < b.intervention_time;
  });
  for (std::size_t i = 0; i < result.trials.size(); ++i) {
    result.trials[i].trial_id = i + 1;
    result.summary.arm_counts[static_cast<std::size_t>(result.trials[i].condition)] += 1;
  }
  return result;
}

void write_coin_attributes_csv(std::ostream& out, const std::vector<CoinAttributes>& attrs) {
  out << "coin,observations,price,volume,spread,best_sell_size,best_buy_size\n";
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& a : attrs) {
    out << a.coin << ',' << a.observations << ',' << num(a.price) << ',' << num(a.volume) << ',' << num(a.spread)
        << ',' << num(a.best_sell_size) << ',' << num(a.best_buy_size) << '\n';
  }
}

std::vector<CoinAttributes> read_coin_attributes_csv(std::istream& in, const std::string& source) {
  std::vector<CoinAttributes> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line.rfind("coin,", 0) != 0) throw ParseError(source, line_no, "missing coin attributes header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_fields(line, ',');
    if (f.size() != 7) throw ParseError(source, line_no, "expected 7 fields, got " + std::to_string(f.size()));
    CoinAttributes a;
    a.coin = std::string(f[0]);
    try {
      a.observations = static_cast<std::uint64_t>(parse_int(f[1]));
      double* dst[] = {&a.price, &a.volume, &a.spread, &a.best_sell_size, &a.best_buy_size};
      for (std::size_t i = 0; i < 5; ++i) *dst[i] = f[i + 2].empty() ? std::nan("") : parse_double(f[i + 2]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace cdalab
