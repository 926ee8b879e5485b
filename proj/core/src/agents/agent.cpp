#include "cdalab/agents/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cdalab {

std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::ZeroIntelligence: return "zi";
    case AgentKind::CopyTrader: return "copy";
    case AgentKind::MomentumTrader: return "momentum";
    case AgentKind::SaliencyTrader: return "saliency";
  }
  return "unknown";
}

AgentKind parse_agent_kind(std::string_view s) {
  if (s == "zi") return AgentKind::ZeroIntelligence;
  if (s == "copy") return AgentKind::CopyTrader;
  if (s == "momentum") return AgentKind::MomentumTrader;
  if (s == "saliency") return AgentKind::SaliencyTrader;
  throw std::invalid_argument("unknown agent kind '" + std::string(s) + "'");
}

void validate(const AgentConfig& cfg) {
  auto probability = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  probability(cfg.theta, "theta");
  probability(cfg.zi.activity, "activity");
  probability(cfg.zi.buy_propensity, "buy_propensity");
  probability(cfg.zi.taker_prob, "taker_prob");
  probability(cfg.zi.improve_prob, "improve_prob");
  if (!(cfg.zi.depth_decay > 0.0 && cfg.zi.depth_decay <= 1.0)) {
    throw std::invalid_argument("depth_decay must lie in (0, 1]");
  }
  if (!(cfg.arrival_rate > 0.0)) throw std::invalid_argument("arrival_rate must be positive");
  if (cfg.lookback <= 0) throw std::invalid_argument("lookback must be positive");
  if (cfg.initial_holdings_value < 0) throw std::invalid_argument("holdings must be non-negative");
  if (!(cfg.zi.size_median > 0.0) || cfg.zi.size_sigma < 0.0) throw std::invalid_argument("invalid size distribution");
  if (cfg.zi.max_slippage_ticks < 0) throw std::invalid_argument("max_slippage_ticks must be non-negative");
  if (cfg.zi.order_ttl <= 0) throw std::invalid_argument("order_ttl must be positive");
  if (cfg.smoothing < 0.0) throw std::invalid_argument("smoothing must be non-negative");
}

namespace {

Quantity lots_for_value(double value, Price price, Notional min_value) {
  auto q = static_cast<Quantity>(std::llround(value / static_cast<double>(price.units)));
  const Quantity min_q = (min_value + price.units - 1) / price.units;
  return std::max({q, min_q, Quantity{1}});
}

/// Applies the no-short-selling constraint; false when the sell must not happen.
bool gate_sell(OrderIntent& intent, const MarketView& view, const AgentConfig& cfg) {
  if (intent.side != Side::Sell) return true;
  if (cfg.buy_only) return false;
  if (cfg.allow_short) return true;
  intent.quantity = std::min(intent.quantity, view.holdings);
  return intent.quantity > 0 && notional(intent.price, intent.quantity) >= view.min_order_value;
}

Millis draw_ttl(Rng& rng, const AgentConfig& cfg) {
  return std::max<Millis>(1, static_cast<Millis>(rng.exponential(1.0 / static_cast<double>(cfg.zi.order_ttl))));
}

AgentDecision passive_order(const MarketView& view, Side side, double value, Rng& rng, const AgentConfig& cfg) {
  OrderIntent intent;
  intent.coin = view.coin;
  intent.side = side;
  intent.tif = TimeInForce::GoodTillExpiry;
  const bool improve = rng.bernoulli(cfg.zi.improve_prob);
  const std::int64_t behind = rng.geometric(cfg.zi.depth_decay);
  const Price anchor_fallback = view.last_price.value_or(view.reference);
  std::int64_t p = 0;
  if (side == Side::Buy) {
    if (view.best_bid) {
      p = improve ? view.best_bid->units + 1 : view.best_bid->units - behind;
    } else {
      p = (view.best_ask ? view.best_ask->units - 1 : anchor_fallback.units) - behind;
    }
    if (view.best_ask) p = std::min(p, view.best_ask->units - 1);
  } else {
    if (view.best_ask) {
      p = improve ? view.best_ask->units - 1 : view.best_ask->units + behind;
    } else {
      p = (view.best_bid ? view.best_bid->units + 1 : anchor_fallback.units) + behind;
    }
    if (view.best_bid) p = std::max(p, view.best_bid->units + 1);
  }
  if (p < 1) return {};
  intent.price = Price{p};
  intent.quantity = lots_for_value(value, intent.price, view.min_order_value);
  intent.ttl = draw_ttl(rng, cfg);
  if (!gate_sell(intent, view, cfg)) return {};
  return AgentDecision{intent};
}

AgentDecision crossing_order(const MarketView& view, Side side, double value, Rng& rng, const AgentConfig& cfg) {
  const auto& far = side == Side::Buy ? view.best_ask : view.best_bid;
  if (!far) return {};
  const std::int64_t slip =
      cfg.zi.max_slippage_ticks > 0 ? rng.uniform_int(0, cfg.zi.max_slippage_ticks) : std::int64_t{0};
  OrderIntent intent;
  intent.coin = view.coin;
  intent.side = side;
  intent.tif = TimeInForce::ImmediateOrCancel;
  intent.price = side == Side::Buy ? *far + slip : Price{std::max<std::int64_t>(1, far->units - slip)};
  intent.quantity = lots_for_value(value, *far, view.min_order_value);
  if (!gate_sell(intent, view, cfg)) return {};
  return AgentDecision{intent};
}

}  // namespace

AgentDecision marketable_order(const MarketView& view, Side side, Rng& rng, const AgentConfig& cfg) {
  const double value = rng.lognormal(cfg.zi.size_median, cfg.zi.size_sigma);
  return crossing_order(view, side, value, rng, cfg);
}

AgentDecision zi_step(const MarketView& view, Rng& rng, const AgentConfig& cfg) {
  if (!rng.bernoulli(cfg.zi.activity)) return {};
  const Side side = rng.bernoulli(cfg.zi.buy_propensity) ? Side::Buy : Side::Sell;
  const double value = rng.lognormal(cfg.zi.size_median, cfg.zi.size_sigma);
  if (rng.bernoulli(cfg.zi.taker_prob)) return crossing_order(view, side, value, rng, cfg);
  return passive_order(view, side, value, rng, cfg);
}

AgentDecision copy_step(const MarketView& view, Rng& rng, const AgentConfig& cfg) {
  const bool recent = view.last_trade_time && view.last_trade_side && view.now - *view.last_trade_time <= cfg.lookback;
  if (recent && rng.bernoulli(cfg.theta)) return marketable_order(view, *view.last_trade_side, rng, cfg);
  return zi_step(view, rng, cfg);
}

AgentDecision momentum_step(const MarketView& view, Rng& rng, const AgentConfig& cfg) {
  if (view.last_price && view.price_at_lookback && *view.last_price != *view.price_at_lookback) {
    if (rng.bernoulli(cfg.theta)) {
      const Side side = *view.last_price > *view.price_at_lookback ? Side::Buy : Side::Sell;
      return marketable_order(view, side, rng, cfg);
    }
  }
  return zi_step(view, rng, cfg);
}

std::size_t choose_salient(std::span<const MarketView> markets, double smoothing, Rng& rng) {
  double total = 0.0;
  for (const auto& m : markets) total += m.recent_trades + smoothing;
  if (total <= 0.0) return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(markets.size()) - 1));
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < markets.size(); ++i) {
    u -= markets[i].recent_trades + smoothing;
    if (u < 0.0) return i;
  }
  // rounding: fall back to the last coin with positive weight
  for (std::size_t i = markets.size(); i-- > 0;) {
    if (markets[i].recent_trades + smoothing > 0.0) return i;
  }
  return markets.size() - 1;
}

AgentDecision saliency_step(std::span<const MarketView> markets, Rng& rng, const AgentConfig& cfg) {
  if (markets.empty()) return {};
  if (rng.bernoulli(cfg.theta)) {
    const std::size_t idx = choose_salient(markets, cfg.smoothing, rng);
    return marketable_order(markets[idx], Side::Buy, rng, cfg);
  }
  const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(markets.size()) - 1));
  return zi_step(markets[idx], rng, cfg);
}

}  // namespace cdalab
