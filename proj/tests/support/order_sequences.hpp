#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cdalab/market/types.hpp"

namespace cdalab::testing {

struct OrderStep {
  bool market = false;
  Order order;  // for market steps only side, quantity, owner, timestamp are used
};

/// Random mix of resting limits, marketable IOC limits and market orders
/// clustered around a price of 100 so that crossing is frequent.
inline std::vector<OrderStep> random_order_sequence(std::uint64_t seed, std::size_t length) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> price_offset(-8, 8);
  std::uniform_int_distribution<Quantity> qty(1, 25);
  std::uniform_int_distribution<int> kind(0, 9);
  std::uniform_int_distribution<OwnerId> owner(1, 6);
  std::bernoulli_distribution buy(0.5);
  std::vector<OrderStep> steps;
  steps.reserve(length);
  Millis now = 1'000;
  for (std::size_t i = 0; i < length; ++i) {
    now += std::uniform_int_distribution<Millis>(0, 3)(rng);
    OrderStep s;
    const int k = kind(rng);
    s.market = k == 0;
    s.order.id = i + 1;
    s.order.side = buy(rng) ? Side::Buy : Side::Sell;
    s.order.price = Price{100 + price_offset(rng)};
    s.order.quantity = qty(rng);
    s.order.timestamp = now;
    s.order.owner = owner(rng);
    s.order.tif = k == 1 ? TimeInForce::ImmediateOrCancel : TimeInForce::GoodTillExpiry;
    steps.push_back(s);
  }
  return steps;
}

}  // namespace cdalab::testing
