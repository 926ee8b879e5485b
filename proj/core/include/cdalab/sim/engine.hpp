#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdalab/market/order_book.hpp"
#include "cdalab/sim/rng.hpp"
#include "cdalab/sim/sim_config.hpp"

namespace cdalab {

/// Owner ids: 0 is the book-seeding liquidity, agents are 1..N, and
/// externally driven accounts (the harness bots) start at kExternalOwnerBase.
inline constexpr OwnerId kSystemOwner = 0;
inline constexpr OwnerId kExternalOwnerBase = 1'000'000'000;

/// Point-in-time value copy of one market. Later events never change it.
struct MarketSnapshot {
  CoinId coin = 0;
  Millis now = 0;
  std::optional<Price> best_bid;
  std::optional<Price> best_ask;
  /// Lots resting at the best bid and ask (0 when absent or unknown).
  Quantity best_bid_size = 0;
  Quantity best_ask_size = 0;
  std::optional<Price> last_price;
  std::optional<Side> last_trade_side;
  std::optional<Millis> last_trade_time;
  /// Volume in (now - 1h, now] and its buy-initiated part.
  Notional hourly_volume = 0;
  Notional hourly_buy_volume = 0;
  /// Total volume since the market's history began, per hour.
  double average_hourly_volume = 0.0;
  /// Trades in (window_start, now], oldest first.
  Millis window_start = 0;
  std::vector<Trade> trades;

  /// Trades with timestamp in (t, now]. Throws std::out_of_range when t
  /// precedes the captured window.
  [[nodiscard]] std::span<const Trade> trades_since(Millis t) const;
};

enum class OrderEventKind : std::uint8_t { Submitted, Expired };

struct OrderEvent {
  Millis timestamp = 0;
  CoinId coin = 0;
  OrderEventKind kind = OrderEventKind::Submitted;
  Order order;
};

/// Everything a run produced, merged across coins by (timestamp, coin).
struct EventLog {
  std::vector<std::string> coin_names;
  std::vector<Trade> trades;
  std::vector<OrderEvent> orders;
  std::uint64_t arrivals = 0;
  Millis start_time = 0;
  Millis end_time = 0;
};

struct CoinSetup {
  double activity_multiplier = 1.0;
  Price initial_price{50};
};

/// Discrete-event simulation of many coin markets.
///
/// Agents arrive as Poisson processes; scheduled callbacks let external
/// drivers (the experiment harness) act at exact times. Each coin has its
/// own event queue when no market-wide agent is configured, so coins can be
/// processed on parallel workers; otherwise one global queue is used. The
/// outcome is identical either way and depends only on the config.
class Simulation {
 public:
  using Callback = std::function<void()>;

  explicit Simulation(SimConfig config);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  [[nodiscard]] const SimConfig& config() const { return config_; }
  /// True when no market-wide (saliency) agent couples the coins.
  [[nodiscard]] bool permits_parallel_coins() const { return parallel_; }
  [[nodiscard]] std::uint32_t coin_count() const { return config_.coins; }
  [[nodiscard]] const std::vector<std::string>& coin_names() const { return coin_names_; }
  [[nodiscard]] const CoinSetup& coin_setup(CoinId coin) const;

  /// Current simulated time on the queue that owns `coin`.
  [[nodiscard]] Millis now(CoinId coin) const;

  /// Runs `fn` at time `at` on the queue that owns `coin`. Callbacks for one
  /// coin are always executed by one thread at a time.
  void schedule(CoinId coin, Millis at, Callback fn);

  /// Processes every event with timestamp <= end_time().
  void run(unsigned threads = 1);

  /// Value snapshot at the coin's current time with trades since `since`
  /// (default: one hour back). Throws std::out_of_range for an unknown coin.
  [[nodiscard]] MarketSnapshot snapshot(CoinId coin, std::optional<Millis> since = std::nullopt) const;

  /// Immediate-or-cancel market order at the coin's current time on behalf of
  /// an external owner. Throws NoLiquidity / OrderRejected.
  std::vector<Trade> execute_market_order(CoinId coin, Side side, Quantity quantity, OwnerId owner);
  [[nodiscard]] MarketQuote quote(CoinId coin, Side side, Quantity quantity) const;

  [[nodiscard]] const OrderBook& book(CoinId coin) const;
  [[nodiscard]] std::uint64_t arrivals() const;
  /// Agents in creation order: per-coin agents coin by coin, then market-wide ones.
  [[nodiscard]] std::size_t agent_count() const;
  [[nodiscard]] Quantity agent_holdings(std::size_t agent, CoinId coin) const;
  [[nodiscard]] const AgentSpec& agent_spec(std::size_t agent) const;

  [[nodiscard]] EventLog event_log() const;

 private:
  struct Impl;
  SimConfig config_;
  bool parallel_ = true;
  std::vector<std::string> coin_names_;
  std::unique_ptr<Impl> impl_;
};

/// Name used for coin `index` in logs ("C000", "C001", ...).
std::string default_coin_name(CoinId index);

/// One line per event: timestamp,coin,submit|expire,order_id,side,price,quantity,owner,ioc|gte,expires_at
void write_order_events(std::ostream& out, const std::vector<OrderEvent>& events,
                        const std::vector<std::string>& coin_names);

}  // namespace cdalab
