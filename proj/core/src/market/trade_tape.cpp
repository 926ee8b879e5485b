#include "cdalab/market/trade_tape.hpp"

#include <algorithm>
#include <stdexcept>

namespace cdalab {

void TradeTape::append(const Trade& t) {
  if (!trades_.empty() && t.timestamp < trades_.back().timestamp) {
    throw std::logic_error("trade tape: timestamps must be non-decreasing");
  }
  const Notional v = notional(t.price, t.quantity);
  const Notional prev_total = total_volume();
  const Notional prev_buy = cum_buy_.empty() ? 0 : cum_buy_.back();
  trades_.push_back(t);
  cum_total_.push_back(prev_total + v);
  cum_buy_.push_back(prev_buy + (t.taker_side == Side::Buy ? v : 0));
}

std::size_t TradeTape::first_after(Millis t) const {
  auto it = std::upper_bound(trades_.begin(), trades_.end(), t,
                             [](Millis value, const Trade& tr) { return value < tr.timestamp; });
  return static_cast<std::size_t>(it - trades_.begin());
}

std::span<const Trade> TradeTape::between(Millis from, Millis to) const {
  if (to <= from) return {};
  const std::size_t lo = first_after(from);
  const std::size_t hi = first_after(to);
  return std::span<const Trade>(trades_).subspan(lo, hi - lo);
}

std::size_t TradeTape::count_between(Millis from, Millis to) const {
  if (to <= from) return 0;
  return first_after(to) - first_after(from);
}

Notional TradeTape::volume_between(Millis from, Millis to) const {
  if (to <= from) return 0;
  return prefix(cum_total_, first_after(to)) - prefix(cum_total_, first_after(from));
}

Notional TradeTape::buy_volume_between(Millis from, Millis to) const {
  if (to <= from) return 0;
  return prefix(cum_buy_, first_after(to)) - prefix(cum_buy_, first_after(from));
}

const Trade* TradeTape::last_at_or_before(Millis t) const {
  const std::size_t idx = first_after(t);
  return idx == 0 ? nullptr : &trades_[idx - 1];
}

}  // namespace cdalab
