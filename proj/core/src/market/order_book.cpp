#include "cdalab/market/order_book.hpp"

#include <algorithm>

namespace cdalab {

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::NonPositiveQuantity: return "non-positive quantity";
    case RejectReason::NonPositivePrice: return "non-positive price";
    case RejectReason::BelowMinimumSize: return "order value below minimum order size";
    case RejectReason::StaleTimestamp: return "timestamp precedes last trade";
  }
  return "unknown";
}

OrderRejected::OrderRejected(RejectReason reason)
    : std::runtime_error(std::string("order rejected: ") + std::string(to_string(reason))),
      reason_(reason) {}

OrderBook::OrderBook(CoinId coin, BookRules rules) : coin_(coin), rules_(rules) {}

void OrderBook::check_timestamp(Millis t) const {
  if (!tape_.empty() && t < tape_.back().timestamp) throw OrderRejected(RejectReason::StaleTimestamp);
}

template <typename Levels>
void OrderBook::match(Levels& levels, Side taker_side, std::optional<Price> limit, Quantity& remaining,
                      OwnerId taker_owner, Millis now, std::vector<Trade>& out) {
  while (remaining > 0 && !levels.empty()) {
    auto level_it = levels.begin();
    const Price level_price{level_it->first};
    if (limit) {
      const bool crosses = taker_side == Side::Buy ? level_price <= *limit : level_price >= *limit;
      if (!crosses) break;
    }
    Level& level = level_it->second;
    while (remaining > 0 && !level.empty()) {
      Order& maker = level.front();
      const Quantity fill = std::min(remaining, maker.quantity);
      Trade t{coin_, level_price, fill, taker_side, now, maker.id, taker_owner, maker.owner};
      tape_.append(t);
      out.push_back(t);
      remaining -= fill;
      maker.quantity -= fill;
      if (maker.quantity == 0) {
        index_.erase(maker.id);
        level.pop_front();
      }
    }
    if (level.empty()) levels.erase(level_it);
  }
}

void OrderBook::rest(const Order& order) {
  if (order.id >= next_id_) next_id_ = order.id + 1;
  index_.emplace(order.id, std::make_pair(order.side, order.price.units));
  if (order.side == Side::Buy) {
    bids_[order.price.units].push_back(order);
  } else {
    asks_[order.price.units].push_back(order);
  }
}

std::vector<Trade> OrderBook::place_limit_order(const Order& order) {
  if (order.quantity <= 0) throw OrderRejected(RejectReason::NonPositiveQuantity);
  if (order.price.units <= 0) throw OrderRejected(RejectReason::NonPositivePrice);
  if (notional(order.price, order.quantity) < rules_.min_order_value) {
    throw OrderRejected(RejectReason::BelowMinimumSize);
  }
  check_timestamp(order.timestamp);

  std::vector<Trade> trades;
  Quantity remaining = order.quantity;
  if (order.side == Side::Buy) {
    match(asks_, Side::Buy, order.price, remaining, order.owner, order.timestamp, trades);
  } else {
    match(bids_, Side::Sell, order.price, remaining, order.owner, order.timestamp, trades);
  }
  if (remaining > 0 && order.tif == TimeInForce::GoodTillExpiry) {
    Order rest_order = order;
    rest_order.quantity = remaining;
    if (rest_order.id == 0) rest_order.id = next_id_++;
    rest(rest_order);
  }
  return trades;
}

std::vector<Trade> OrderBook::place_market_order(Side side, Quantity quantity, OwnerId owner, Millis now) {
  if (quantity <= 0) throw OrderRejected(RejectReason::NonPositiveQuantity);
  const auto opposite_best = side == Side::Buy ? best_ask() : best_bid();
  if (!opposite_best) throw NoLiquidity();
  if (notional(*opposite_best, quantity) < rules_.min_order_value) {
    throw OrderRejected(RejectReason::BelowMinimumSize);
  }
  check_timestamp(now);

  std::vector<Trade> trades;
  Quantity remaining = quantity;
  if (side == Side::Buy) {
    match(asks_, Side::Buy, std::nullopt, remaining, owner, now, trades);
  } else {
    match(bids_, Side::Sell, std::nullopt, remaining, owner, now, trades);
  }
  return trades;
}

MarketQuote OrderBook::quote_market(Side side, Quantity quantity) const {
  MarketQuote q;
  auto walk = [&](const auto& levels) {
    for (const auto& [price, level] : levels) {
      for (const Order& o : level) {
        if (q.fillable == quantity) return;
        const Quantity take = std::min(quantity - q.fillable, o.quantity);
        q.fillable += take;
        q.cost += notional(Price{price}, take);
      }
    }
  };
  if (side == Side::Buy) {
    walk(asks_);
  } else {
    walk(bids_);
  }
  return q;
}

std::optional<Order> OrderBook::cancel(OrderId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  const auto [side, price] = it->second;
  index_.erase(it);
  auto remove_from = [&](auto& levels) -> std::optional<Order> {
    auto level_it = levels.find(price);
    if (level_it == levels.end()) return std::nullopt;
    Level& level = level_it->second;
    auto pos = std::find_if(level.begin(), level.end(), [&](const Order& o) { return o.id == id; });
    if (pos == level.end()) return std::nullopt;
    Order removed = *pos;
    level.erase(pos);
    if (level.empty()) levels.erase(level_it);
    return removed;
  };
  return side == Side::Buy ? remove_from(bids_) : remove_from(asks_);
}

std::vector<Order> OrderBook::expire(Millis now) {
  std::vector<Order> removed;
  auto sweep = [&](auto& levels) {
    for (auto level_it = levels.begin(); level_it != levels.end();) {
      Level& level = level_it->second;
      for (auto it = level.begin(); it != level.end();) {
        if (it->expires_at <= now) {
          removed.push_back(*it);
          index_.erase(it->id);
          it = level.erase(it);
        } else {
          ++it;
        }
      }
      level_it = level.empty() ? levels.erase(level_it) : std::next(level_it);
    }
  };
  sweep(bids_);
  sweep(asks_);
  return removed;
}

std::optional<Price> OrderBook::best_bid() const {
  if (bids_.empty()) return std::nullopt;
  return Price{bids_.begin()->first};
}

std::optional<Price> OrderBook::best_ask() const {
  if (asks_.empty()) return std::nullopt;
  return Price{asks_.begin()->first};
}

std::optional<Price> OrderBook::last_price() const {
  if (tape_.empty()) return std::nullopt;
  return tape_.back().price;
}

Quantity OrderBook::quantity_at_best(Side side) const {
  auto total = [](const Level& level) {
    Quantity q = 0;
    for (const Order& o : level) q += o.quantity;
    return q;
  };
  if (side == Side::Buy) return bids_.empty() ? 0 : total(bids_.begin()->second);
  return asks_.empty() ? 0 : total(asks_.begin()->second);
}

std::vector<Order> OrderBook::resting(Side side) const {
  std::vector<Order> out;
  auto collect = [&](const auto& levels) {
    for (const auto& [price, level] : levels) out.insert(out.end(), level.begin(), level.end());
  };
  if (side == Side::Buy) {
    collect(bids_);
  } else {
    collect(asks_);
  }
  return out;
}

}  // namespace cdalab
