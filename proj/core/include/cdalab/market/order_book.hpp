#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdalab/market/trade_tape.hpp"
#include "cdalab/market/types.hpp"

namespace cdalab {

enum class RejectReason { NonPositiveQuantity, NonPositivePrice, BelowMinimumSize, StaleTimestamp };

std::string_view to_string(RejectReason r);

class OrderRejected : public std::runtime_error {
 public:
  explicit OrderRejected(RejectReason reason);
  [[nodiscard]] RejectReason reason() const { return reason_; }

 private:
  RejectReason reason_;
};

class NoLiquidity : public std::runtime_error {
 public:
  NoLiquidity() : std::runtime_error("no liquidity on the opposite side of the book") {}
};

struct BookRules {
  /// Minimum price*quantity of an order; 10 units is 1e-7 BTC.
  Notional min_order_value = 10;
};

/// Result of walking the opposite side without mutating it.
struct MarketQuote {
  Quantity fillable = 0;
  Notional cost = 0;
};

/// Continuous double auction book for one coin.
///
/// Bids are kept best-first (descending), asks best-first (ascending), FIFO
/// inside a price level. Incoming orders match greedily while they cross and
/// every fill executes at the resting order's price. Single writer: callers
/// serialize mutations.
class OrderBook {
 public:
  explicit OrderBook(CoinId coin = 0, BookRules rules = {});

  /// Matches `order` against the opposite side, rests any remainder unless
  /// the order is immediate-or-cancel. Throws OrderRejected.
  std::vector<Trade> place_limit_order(const Order& order);

  /// Immediate-or-cancel at any price. Throws NoLiquidity when the opposite
  /// side is empty, OrderRejected on a non-positive quantity.
  std::vector<Trade> place_market_order(Side side, Quantity quantity, OwnerId owner, Millis now);

  /// What a market order of this size would fill right now.
  [[nodiscard]] MarketQuote quote_market(Side side, Quantity quantity) const;

  /// Removes a resting order, returning it if found.
  std::optional<Order> cancel(OrderId id);

  /// Removes every resting order with expires_at <= now.
  std::vector<Order> expire(Millis now);

  [[nodiscard]] std::optional<Price> best_bid() const;
  [[nodiscard]] std::optional<Price> best_ask() const;
  [[nodiscard]] std::optional<Price> last_price() const;
  [[nodiscard]] Quantity quantity_at_best(Side side) const;

  /// Resting orders on one side in priority order.
  [[nodiscard]] std::vector<Order> resting(Side side) const;
  [[nodiscard]] std::size_t resting_count() const { return index_.size(); }

  [[nodiscard]] const TradeTape& tape() const { return tape_; }
  [[nodiscard]] std::span<const Trade> trade_history() const { return tape_.trades(); }
  [[nodiscard]] CoinId coin() const { return coin_; }
  [[nodiscard]] const BookRules& rules() const { return rules_; }

  /// Next id the book would assign to an order submitted without one.
  OrderId next_order_id() { return next_id_++; }

 private:
  using Level = std::deque<Order>;
  using BidLevels = std::map<std::int64_t, Level, std::greater<>>;
  using AskLevels = std::map<std::int64_t, Level, std::less<>>;

  CoinId coin_;
  BookRules rules_;
  BidLevels bids_;
  AskLevels asks_;
  std::unordered_map<OrderId, std::pair<Side, std::int64_t>> index_;
  TradeTape tape_;
  OrderId next_id_ = 1;

  void check_timestamp(Millis t) const;
  template <typename Levels>
  void match(Levels& levels, Side taker_side, std::optional<Price> limit, Quantity& remaining,
             OwnerId taker_owner, Millis now, std::vector<Trade>& out);
  void rest(const Order& order);
};

}  // namespace cdalab
