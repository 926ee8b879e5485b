#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cdalab/market/types.hpp"

namespace cdalab {

/// Append-only trade history with running volume totals so that windowed
/// volume and count queries are O(log n).
class TradeTape {
 public:
  /// Throws std::logic_error if `t` is older than the last appended trade.
  void append(const Trade& t);

  [[nodiscard]] std::span<const Trade> trades() const { return trades_; }
  [[nodiscard]] std::size_t size() const { return trades_.size(); }
  [[nodiscard]] bool empty() const { return trades_.empty(); }
  [[nodiscard]] const Trade& back() const { return trades_.back(); }

  /// Index of the first trade with timestamp > t.
  [[nodiscard]] std::size_t first_after(Millis t) const;

  /// Trades with timestamp in (from, to].
  [[nodiscard]] std::span<const Trade> between(Millis from, Millis to) const;
  [[nodiscard]] std::size_t count_between(Millis from, Millis to) const;
  [[nodiscard]] Notional volume_between(Millis from, Millis to) const;
  [[nodiscard]] Notional buy_volume_between(Millis from, Millis to) const;
  [[nodiscard]] Notional total_volume() const { return cum_total_.empty() ? 0 : cum_total_.back(); }

  /// Most recent trade with timestamp <= t, if any.
  [[nodiscard]] const Trade* last_at_or_before(Millis t) const;

 private:
  std::vector<Trade> trades_;
  // cum_*[i] = volume of trades_[0..i]
  std::vector<Notional> cum_total_;
  std::vector<Notional> cum_buy_;

  [[nodiscard]] Notional prefix(const std::vector<Notional>& cum, std::size_t end) const {
    return end == 0 ? 0 : cum[end - 1];
  }
};

}  // namespace cdalab
