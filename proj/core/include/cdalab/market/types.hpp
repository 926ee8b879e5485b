#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

namespace cdalab {

/// Simulated or recorded wall-clock time, unix milliseconds.
using Millis = std::int64_t;
/// Order quantity in integer lots of the traded coin.
using Quantity = std::int64_t;
/// Base-currency amount in minimum denominations (1 unit = 1e-8 BTC).
using Notional = std::int64_t;
using OrderId = std::uint64_t;
using OwnerId = std::uint32_t;
using CoinId = std::uint32_t;

inline constexpr Millis kNever = std::numeric_limits<Millis>::max();
inline constexpr Millis kMinute = 60'000;
inline constexpr Millis kHour = 60 * kMinute;
inline constexpr Millis kDay = 24 * kHour;

/// Price of one lot in minimum denominations. Integer only.
struct Price {
  std::int64_t units = 0;

  constexpr Price() = default;
  constexpr explicit Price(std::int64_t u) : units(u) {}

  friend constexpr auto operator<=>(Price, Price) = default;
  friend constexpr Price operator+(Price p, std::int64_t ticks) { return Price{p.units + ticks}; }
  friend constexpr Price operator-(Price p, std::int64_t ticks) { return Price{p.units - ticks}; }
};

constexpr Notional notional(Price p, Quantity q) { return p.units * q; }

enum class Side : std::uint8_t { Buy, Sell };

constexpr Side opposite(Side s) { return s == Side::Buy ? Side::Sell : Side::Buy; }
constexpr char side_code(Side s) { return s == Side::Buy ? 'B' : 'S'; }
constexpr std::string_view side_name(Side s) { return s == Side::Buy ? "buy" : "sell"; }

enum class TimeInForce : std::uint8_t {
  GoodTillExpiry,     // remainder rests until filled, cancelled or expired
  ImmediateOrCancel,  // remainder discarded
};

struct Order {
  OrderId id = 0;
  CoinId coin = 0;
  Side side = Side::Buy;
  Price price;
  Quantity quantity = 0;
  Millis timestamp = 0;
  OwnerId owner = 0;
  TimeInForce tif = TimeInForce::GoodTillExpiry;
  Millis expires_at = kNever;
};

struct Trade {
  CoinId coin = 0;
  Price price;
  Quantity quantity = 0;
  Side taker_side = Side::Buy;
  Millis timestamp = 0;
  OrderId maker_order_id = 0;
  OwnerId taker_owner = 0;
  OwnerId maker_owner = 0;

  friend bool operator==(const Trade&, const Trade&) = default;
};

enum class PriceImpact : std::uint8_t { Raised, Lowered, Unchanged };

constexpr PriceImpact price_impact(const Trade& trade, Price previous_last_price) {
  if (trade.price > previous_last_price) return PriceImpact::Raised;
  if (trade.price < previous_last_price) return PriceImpact::Lowered;
  return PriceImpact::Unchanged;
}

}  // namespace cdalab
