#include "cdalab/sim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace cdalab {

std::string default_coin_name(CoinId index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "C%03u", static_cast<unsigned>(index));
  return buf;
}

void write_order_events(std::ostream& out, const std::vector<OrderEvent>& events,
                        const std::vector<std::string>& coin_names) {
  for (const OrderEvent& e : events) {
    const Order& o = e.order;
    out << e.timestamp << ',' << coin_names.at(e.coin) << ','
        << (e.kind == OrderEventKind::Submitted ? "submit" : "expire") << ',' << o.id << ',' << side_code(o.side) << ','
        << o.price.units << ',' << o.quantity << ',' << o.owner << ','
        << (o.tif == TimeInForce::ImmediateOrCancel ? "ioc" : "gte") << ',' << o.expires_at << '\n';
  }
}

std::span<const Trade> MarketSnapshot::trades_since(Millis t) const {
  if (t < window_start) throw std::out_of_range("snapshot does not cover the requested window");
  auto it = std::upper_bound(trades.begin(), trades.end(), t,
                             [](Millis value, const Trade& tr) { return value < tr.timestamp; });
  return std::span<const Trade>(trades).subspan(static_cast<std::size_t>(it - trades.begin()));
}

namespace {

enum class EventKind : std::uint32_t { AgentArrival, Sweep, Callback };

struct Event {
  Millis t;
  std::uint64_t seq;
  EventKind kind;
  std::uint32_t target;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.t != b.t ? a.t > b.t : a.seq > b.seq;
  }
};

constexpr CoinId kGlobalHome = static_cast<CoinId>(-1);

}  // namespace

struct Simulation::Impl {
  struct Agent {
    std::size_t spec = 0;
    CoinId home = kGlobalHome;
    OwnerId owner = 0;
    double rate_per_ms = 0.0;
    Rng rng;
    std::vector<Quantity> holdings;  // one entry for a home coin, one per coin otherwise

    [[nodiscard]] bool global() const { return home == kGlobalHome; }
    Quantity& holdings_for(CoinId coin) { return global() ? holdings[coin] : holdings[0]; }
  };

  struct Partition {
    std::vector<Event> heap;
    std::uint64_t seq = 0;
    Millis clock = 0;
    std::vector<Callback> callbacks;
    std::vector<std::uint32_t> free_slots;
    std::uint64_t arrivals = 0;

    void push(Millis t, EventKind kind, std::uint32_t target) {
      heap.push_back(Event{t, seq++, kind, target});
      std::push_heap(heap.begin(), heap.end(), Later{});
    }
  };

  struct Coin {
    OrderBook book;
    CoinSetup setup;
    std::uint32_t partition = 0;
    std::vector<OrderEvent> order_events;
  };

  const SimConfig& cfg;
  std::vector<Coin> coins;
  std::vector<Agent> agents;
  std::vector<Partition> partitions;

  explicit Impl(const SimConfig& c) : cfg(c) {}

  Agent* agent_by_owner(OwnerId owner) {
    if (owner == kSystemOwner || owner >= kExternalOwnerBase) return nullptr;
    const std::size_t idx = owner - 1;
    return idx < agents.size() ? &agents[idx] : nullptr;
  }

  Partition& partition_of(CoinId coin) { return partitions[coins[coin].partition]; }

  Millis next_gap(Agent& a) {
    return std::max<Millis>(1, static_cast<Millis>(std::llround(a.rng.exponential(a.rate_per_ms))));
  }

  MarketView make_view(CoinId c, Millis t, const AgentConfig& ac, Quantity holdings) const {
    const Coin& coin = coins[c];
    MarketView v;
    v.coin = c;
    v.now = t;
    v.best_bid = coin.book.best_bid();
    v.best_ask = coin.book.best_ask();
    const TradeTape& tape = coin.book.tape();
    if (!tape.empty()) {
      const Trade& last = tape.back();
      v.last_price = last.price;
      v.last_trade_side = last.taker_side;
      v.last_trade_time = last.timestamp;
    }
    if (ac.kind == AgentKind::MomentumTrader) {
      if (const Trade* past = tape.last_at_or_before(t - ac.lookback)) v.price_at_lookback = past->price;
    }
    if (ac.kind == AgentKind::SaliencyTrader) {
      v.recent_trades = static_cast<std::uint32_t>(tape.count_between(t - ac.lookback, t));
    }
    v.reference = coin.setup.initial_price;
    v.min_order_value = cfg.min_order_size;
    v.holdings = holdings;
    return v;
  }

  void credit_makers(const std::vector<Trade>& trades) {
    for (const Trade& tr : trades) {
      if (tr.taker_side != Side::Sell) continue;  // filled resting sells were reserved up front
      if (Agent* maker = agent_by_owner(tr.maker_owner)) maker->holdings_for(tr.coin) += tr.quantity;
    }
  }

  void submit(Agent& a, const OrderIntent& intent, Millis t) {
    Coin& coin = coins[intent.coin];
    Order o;
    o.id = coin.book.next_order_id();
    o.coin = intent.coin;
    o.side = intent.side;
    o.price = intent.price;
    o.quantity = intent.quantity;
    o.timestamp = t;
    o.owner = a.owner;
    o.tif = intent.tif;
    o.expires_at = intent.tif == TimeInForce::GoodTillExpiry && intent.ttl != kNever ? t + intent.ttl : kNever;

    Quantity& held = a.holdings_for(intent.coin);
    if (o.side == Side::Sell) held -= o.quantity;
    std::vector<Trade> trades;
    try {
      trades = coin.book.place_limit_order(o);
    } catch (const OrderRejected&) {
      if (o.side == Side::Sell) held += o.quantity;
      return;
    }
    Quantity filled = 0;
    for (const Trade& tr : trades) filled += tr.quantity;
    if (o.side == Side::Buy) {
      held += filled;
    } else if (o.tif == TimeInForce::ImmediateOrCancel) {
      held += o.quantity - filled;
    }
    credit_makers(trades);
    if (cfg.record_orders) coin.order_events.push_back(OrderEvent{t, o.coin, OrderEventKind::Submitted, o});
  }

  void on_arrival(Partition& part, std::uint32_t agent_idx, Millis t) {
    Agent& a = agents[agent_idx];
    const AgentConfig& ac = cfg.agents[a.spec].config;
    ++part.arrivals;
    AgentDecision decision;
    if (!a.global()) {
      const MarketView v = make_view(a.home, t, ac, a.holdings[0]);
      switch (ac.kind) {
        case AgentKind::ZeroIntelligence: decision = zi_step(v, a.rng, ac); break;
        case AgentKind::CopyTrader: decision = copy_step(v, a.rng, ac); break;
        case AgentKind::MomentumTrader: decision = momentum_step(v, a.rng, ac); break;
        case AgentKind::SaliencyTrader: decision = zi_step(v, a.rng, ac); break;
      }
    } else {
      std::vector<MarketView> views;
      views.reserve(coins.size());
      for (CoinId c = 0; c < coins.size(); ++c) views.push_back(make_view(c, t, ac, a.holdings[c]));
      decision = saliency_step(views, a.rng, ac);
    }
    part.push(t + next_gap(a), EventKind::AgentArrival, agent_idx);
    if (decision.order) submit(a, *decision.order, t);
  }

  void on_sweep(Partition& part, CoinId c, Millis t) {
    Coin& coin = coins[c];
    for (const Order& o : coin.book.expire(t)) {
      if (o.side == Side::Sell) {
        if (Agent* owner = agent_by_owner(o.owner)) owner->holdings_for(c) += o.quantity;
      }
      if (cfg.record_orders) coin.order_events.push_back(OrderEvent{t, c, OrderEventKind::Expired, o});
    }
    part.push(t + cfg.sweep_interval, EventKind::Sweep, c);
  }

  void run_partition(Partition& part, Millis end) {
    while (!part.heap.empty() && part.heap.front().t <= end) {
      std::pop_heap(part.heap.begin(), part.heap.end(), Later{});
      const Event ev = part.heap.back();
      part.heap.pop_back();
      part.clock = ev.t;
      switch (ev.kind) {
        case EventKind::AgentArrival: on_arrival(part, ev.target, ev.t); break;
        case EventKind::Sweep: on_sweep(part, ev.target, ev.t); break;
        case EventKind::Callback: {
          Callback fn = std::move(part.callbacks[ev.target]);
          part.callbacks[ev.target] = nullptr;
          part.free_slots.push_back(ev.target);
          fn();
          break;
        }
      }
    }
    part.clock = std::max(part.clock, end);
  }
};

Simulation::Simulation(SimConfig config) : config_(std::move(config)) {
  validate(config_);
  impl_ = std::make_unique<Impl>(config_);
  Impl& im = *impl_;

  for (const auto& spec : config_.agents) {
    if (spec.config.kind == AgentKind::SaliencyTrader && spec.count > 0) parallel_ = false;
  }

  const std::uint32_t n = config_.coins;
  im.partitions.resize(parallel_ ? n : 1);
  for (auto& p : im.partitions) p.clock = config_.start_time;
  im.coins.reserve(n);
  for (CoinId c = 0; c < n; ++c) {
    coin_names_.push_back(default_coin_name(c));
    Rng setup_rng(derive_seed(config_.seed, Stream::CoinSetup, {c}));
    Impl::Coin coin{OrderBook(c, BookRules{config_.min_order_size}), {}, parallel_ ? c : 0, {}};
    const double sigma = config_.activity_sigma;
    coin.setup.activity_multiplier = std::exp(sigma * setup_rng.normal() - 0.5 * sigma * sigma);
    coin.setup.initial_price = Price{std::max<std::int64_t>(
        2, std::llround(setup_rng.lognormal(config_.price_median, config_.price_sigma)))};
    im.coins.push_back(std::move(coin));
  }

  // Seed liquidity on both sides of each book.
  for (CoinId c = 0; c < n; ++c) {
    OrderBook& book = im.coins[c].book;
    const std::int64_t p0 = im.coins[c].setup.initial_price.units;
    for (std::uint32_t k = 0; k < config_.initial_levels; ++k) {
      for (Side side : {Side::Sell, Side::Buy}) {
        const std::int64_t p = side == Side::Sell ? p0 + 1 + k : p0 - 1 - static_cast<std::int64_t>(k);
        if (p < 1) continue;
        Order o;
        o.id = book.next_order_id();
        o.coin = c;
        o.side = side;
        o.price = Price{p};
        o.quantity = std::max<Quantity>(1, config_.initial_level_value / p);
        if (notional(o.price, o.quantity) < config_.min_order_size) {
          o.quantity = (config_.min_order_size + p - 1) / p;
        }
        o.timestamp = config_.start_time;
        o.owner = kSystemOwner;
        o.expires_at = config_.start_time + config_.initial_order_ttl;
        book.place_limit_order(o);
      }
    }
  }

  // Agents: per-coin populations coin by coin, then market-wide agents.
  auto add_agent = [&](std::size_t spec_idx, CoinId home, std::uint32_t i) {
    const AgentSpec& spec = config_.agents[spec_idx];
    Impl::Agent a;
    a.spec = spec_idx;
    a.home = home;
    a.owner = static_cast<OwnerId>(im.agents.size() + 1);
    const std::uint64_t home_key = home == kGlobalHome ? 0xFFFFFFFFULL : home;
    a.rng = Rng(derive_seed(config_.seed, Stream::Agent, {spec_idx, home_key, i}));
    const double multiplier = home == kGlobalHome ? 1.0 : im.coins[home].setup.activity_multiplier;
    a.rate_per_ms = spec.config.arrival_rate * multiplier / static_cast<double>(kHour);
    auto lots = [&](CoinId c) {
      return spec.config.initial_holdings_value / im.coins[c].setup.initial_price.units;
    };
    if (home == kGlobalHome) {
      for (CoinId c = 0; c < n; ++c) a.holdings.push_back(lots(c));
    } else {
      a.holdings.push_back(lots(home));
    }
    im.agents.push_back(std::move(a));
  };
  for (CoinId c = 0; c < n; ++c) {
    for (std::size_t s = 0; s < config_.agents.size(); ++s) {
      if (config_.agents[s].config.kind == AgentKind::SaliencyTrader) continue;
      for (std::uint32_t i = 0; i < config_.agents[s].count; ++i) add_agent(s, c, i);
    }
  }
  for (std::size_t s = 0; s < config_.agents.size(); ++s) {
    if (config_.agents[s].config.kind != AgentKind::SaliencyTrader) continue;
    for (std::uint32_t i = 0; i < config_.agents[s].count; ++i) add_agent(s, kGlobalHome, i);
  }
  if (im.agents.size() >= kExternalOwnerBase - 1) throw std::invalid_argument("too many agents");

  for (std::uint32_t idx = 0; idx < im.agents.size(); ++idx) {
    Impl::Agent& a = im.agents[idx];
    Impl::Partition& part = a.global() ? im.partitions[0] : im.partition_of(a.home);
    part.push(config_.start_time + im.next_gap(a), EventKind::AgentArrival, idx);
  }
  for (CoinId c = 0; c < n; ++c) {
    im.partition_of(c).push(config_.start_time + config_.sweep_interval, EventKind::Sweep, c);
  }
}

Simulation::~Simulation() = default;

const CoinSetup& Simulation::coin_setup(CoinId coin) const { return impl_->coins.at(coin).setup; }

Millis Simulation::now(CoinId coin) const {
  return impl_->partitions[impl_->coins.at(coin).partition].clock;
}

void Simulation::schedule(CoinId coin, Millis at, Callback fn) {
  Impl::Partition& part = impl_->partition_of(coin);
  if (at < part.clock) throw std::logic_error("cannot schedule an event in the past");
  std::uint32_t slot;
  if (!part.free_slots.empty()) {
    slot = part.free_slots.back();
    part.free_slots.pop_back();
    part.callbacks[slot] = std::move(fn);
  } else {
    slot = static_cast<std::uint32_t>(part.callbacks.size());
    part.callbacks.push_back(std::move(fn));
  }
  part.push(at, EventKind::Callback, slot);
}

void Simulation::run(unsigned threads) {
  Impl& im = *impl_;
  const Millis end = config_.end_time();
  const std::size_t n = im.partitions.size();
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (auto& p : im.partitions) im.run_partition(p, end);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          im.run_partition(im.partitions[i], end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

MarketSnapshot Simulation::snapshot(CoinId coin, std::optional<Millis> since) const {
  if (coin >= impl_->coins.size()) throw std::out_of_range("unknown coin " + std::to_string(coin));
  const Impl::Coin& c = impl_->coins[coin];
  const Millis t = now(coin);
  MarketSnapshot s;
  s.coin = coin;
  s.now = t;
  s.best_bid = c.book.best_bid();
  s.best_ask = c.book.best_ask();
  s.best_bid_size = c.book.quantity_at_best(Side::Buy);
  s.best_ask_size = c.book.quantity_at_best(Side::Sell);
  const TradeTape& tape = c.book.tape();
  if (const Trade* last = tape.last_at_or_before(t)) {
    s.last_price = last->price;
    s.last_trade_side = last->taker_side;
    s.last_trade_time = last->timestamp;
  }
  s.hourly_volume = tape.volume_between(t - kHour, t);
  s.hourly_buy_volume = tape.buy_volume_between(t - kHour, t);
  const double hours = static_cast<double>(t - config_.start_time) / static_cast<double>(kHour);
  s.average_hourly_volume =
      hours > 0 ? static_cast<double>(tape.volume_between(config_.start_time - 1, t)) / hours : 0.0;
  s.window_start = since.value_or(t - kHour);
  const auto window = tape.between(s.window_start, t);
  s.trades.assign(window.begin(), window.end());
  return s;
}

std::vector<Trade> Simulation::execute_market_order(CoinId coin, Side side, Quantity quantity, OwnerId owner) {
  Impl::Coin& c = impl_->coins.at(coin);
  auto trades = c.book.place_market_order(side, quantity, owner, now(coin));
  impl_->credit_makers(trades);
  return trades;
}

MarketQuote Simulation::quote(CoinId coin, Side side, Quantity quantity) const {
  return impl_->coins.at(coin).book.quote_market(side, quantity);
}

const OrderBook& Simulation::book(CoinId coin) const { return impl_->coins.at(coin).book; }

std::uint64_t Simulation::arrivals() const {
  std::uint64_t total = 0;
  for (const auto& p : impl_->partitions) total += p.arrivals;
  return total;
}

std::size_t Simulation::agent_count() const { return impl_->agents.size(); }

Quantity Simulation::agent_holdings(std::size_t agent, CoinId coin) const {
  auto& a = impl_->agents.at(agent);
  return a.global() ? a.holdings.at(coin) : a.holdings.at(0);
}

const AgentSpec& Simulation::agent_spec(std::size_t agent) const {
  return config_.agents.at(impl_->agents.at(agent).spec);
}

EventLog Simulation::event_log() const {
  EventLog log;
  log.coin_names = coin_names_;
  log.start_time = config_.start_time;
  log.end_time = config_.end_time();
  log.arrivals = arrivals();
  for (const auto& c : impl_->coins) {
    const auto trades = c.book.trade_history();
    log.trades.insert(log.trades.end(), trades.begin(), trades.end());
    log.orders.insert(log.orders.end(), c.order_events.begin(), c.order_events.end());
  }
  std::stable_sort(log.trades.begin(), log.trades.end(),
                   [](const Trade& a, const Trade& b) { return a.timestamp < b.timestamp; });
  std::stable_sort(log.orders.begin(), log.orders.end(),
                   [](const OrderEvent& a, const OrderEvent& b) { return a.timestamp < b.timestamp; });
  return log;
}

}  // namespace cdalab
