#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cdalab/market/types.hpp"
#include "cdalab/sim/rng.hpp"

namespace cdalab {

enum class AgentKind { ZeroIntelligence, CopyTrader, MomentumTrader, SaliencyTrader };

std::string_view to_string(AgentKind k);
/// Accepts "zi", "copy", "momentum", "saliency". Throws std::invalid_argument.
AgentKind parse_agent_kind(std::string_view s);

/// Noise-trading behaviour shared by every kind (the fallback path).
struct ZiParams {
  /// Probability an arrival produces an order at all.
  double activity = 1.0;
  double buy_propensity = 0.5;
  /// Probability the order is marketable (crosses the spread) rather than
  /// resting passively behind the own-side best quote.
  double taker_prob = 0.5;
  /// Order value in base units drawn log-normally.
  double size_median = 20'000.0;
  double size_sigma = 1.0;
  /// Marketable orders are IOC limits up to this many ticks through the best quote.
  std::int64_t max_slippage_ticks = 0;
  /// Passive orders improve the best quote by one tick with this probability,
  /// otherwise rest a geometric number of ticks behind it.
  double improve_prob = 0.3;
  double depth_decay = 0.5;
  /// Mean lifetime of a resting order.
  Millis order_ttl = 2 * kHour;
};

struct AgentConfig {
  AgentKind kind = AgentKind::ZeroIntelligence;
  /// Strength of the behavioural rule, a probability.
  double theta = 0.0;
  /// Expected arrivals per simulated hour (before the coin's activity multiplier).
  double arrival_rate = 1.0;
  Millis lookback = 10 * kMinute;
  /// Starting coin holdings, expressed as base-currency value at the coin's
  /// initial price.
  Notional initial_holdings_value = 0;
  bool allow_short = false;
  /// Never sells, whatever the rule says.
  bool buy_only = false;
  /// Saliency traders: pseudo-count added to every coin's trade count.
  double smoothing = 1.0;
  ZiParams zi;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const AgentConfig& cfg);

/// What an agent sees of one market at decision time.
struct MarketView {
  CoinId coin = 0;
  Millis now = 0;
  std::optional<Price> best_bid;
  std::optional<Price> best_ask;
  std::optional<Price> last_price;
  std::optional<Side> last_trade_side;
  std::optional<Millis> last_trade_time;
  /// Last traded price as of now - lookback.
  std::optional<Price> price_at_lookback;
  /// Trades in (now - lookback, now].
  std::uint32_t recent_trades = 0;
  /// Fallback anchor for empty books.
  Price reference{1};
  Notional min_order_value = 10;
  /// The deciding agent's holdings of this coin, in lots.
  Quantity holdings = 0;
};

struct OrderIntent {
  CoinId coin = 0;
  Side side = Side::Buy;
  Price price;
  Quantity quantity = 0;
  TimeInForce tif = TimeInForce::GoodTillExpiry;
  Millis ttl = kNever;
};

struct AgentDecision {
  std::optional<OrderIntent> order;

  [[nodiscard]] bool none() const { return !order.has_value(); }
};

AgentDecision zi_step(const MarketView& view, Rng& rng, const AgentConfig& cfg);
AgentDecision copy_step(const MarketView& view, Rng& rng, const AgentConfig& cfg);
AgentDecision momentum_step(const MarketView& view, Rng& rng, const AgentConfig& cfg);
/// `markets` covers every simulated coin, indexed by CoinId.
AgentDecision saliency_step(std::span<const MarketView> markets, Rng& rng, const AgentConfig& cfg);

/// Marketable IOC order on `side` sized from the ZI size distribution, or
/// none when the opposite side is empty or holdings forbid it.
AgentDecision marketable_order(const MarketView& view, Side side, Rng& rng, const AgentConfig& cfg);

/// Index drawn with probability proportional to recent_trades + smoothing.
std::size_t choose_salient(std::span<const MarketView> markets, double smoothing, Rng& rng);

}  // namespace cdalab
