#include "cdalab/exchange/exchange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cdalab {

std::string_view to_string(ExchangeErrorKind k) {
  switch (k) {
    case ExchangeErrorKind::ApiUnavailable: return "api_unavailable";
    case ExchangeErrorKind::NoLiquidity: return "no_liquidity";
    case ExchangeErrorKind::InsufficientFunds: return "insufficient_funds";
    case ExchangeErrorKind::UnknownMarket: return "unknown_market";
    case ExchangeErrorKind::RateLimited: return "rate_limited";
  }
  return "unknown";
}

ExchangeError::ExchangeError(ExchangeErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

Notional fill_fee(Notional gross, double fee_rate) {
  if (fee_rate <= 0.0) return 0;
  return static_cast<Notional>(std::ceil(static_cast<double>(gross) * fee_rate - 1e-9));
}

namespace {

[[noreturn]] void unknown_market(CoinId coin) {
  throw ExchangeError(ExchangeErrorKind::UnknownMarket, "no market with id " + std::to_string(coin));
}

}  // namespace

// ---------------------------------------------------------------- SimExchange

SimExchange::SimExchange(Simulation& sim, FaultConfig faults) : sim_(sim), faults_(faults) {
  if (!(faults.api_failure_rate >= 0.0 && faults.api_failure_rate <= 1.0)) {
    throw std::invalid_argument("api_failure_rate must lie in [0, 1]");
  }
  for (CoinId c = 0; c < sim.coin_count(); ++c) {
    auto a = std::make_unique<Account>();
    a->faults = Rng(derive_seed(faults.seed, Stream::Faults, {c}));
    accounts_.push_back(std::move(a));
  }
}

SimExchange::Account& SimExchange::account(CoinId coin) {
  if (coin >= accounts_.size()) unknown_market(coin);
  return *accounts_[coin];
}

const SimExchange::Account& SimExchange::account(CoinId coin) const {
  if (coin >= accounts_.size()) unknown_market(coin);
  return *accounts_[coin];
}

void SimExchange::maybe_fail(Account& acct, const char* call) {
  if (faults_.api_failure_rate > 0.0 && acct.faults.bernoulli(faults_.api_failure_rate)) {
    ++acct.failures;
    throw ExchangeError(ExchangeErrorKind::ApiUnavailable, std::string(call) + " failed");
  }
}

MarketSnapshot SimExchange::get_market_state(CoinId coin, Millis since) {
  Account& acct = account(coin);
  std::lock_guard lock(acct.mutex);
  maybe_fail(acct, "get_market_state");
  return sim_.snapshot(coin, since);
}

FillReport SimExchange::place_order(CoinId coin, Side side, Quantity quantity) {
  Account& acct = account(coin);
  std::lock_guard lock(acct.mutex);
  maybe_fail(acct, "place_order");
  if (quantity <= 0) throw ExchangeError(ExchangeErrorKind::InsufficientFunds, "order quantity must be positive");
  const double fee_rate = sim_.config().fee_rate;
  const MarketQuote q = sim_.quote(coin, side, quantity);
  if (q.fillable == 0) throw ExchangeError(ExchangeErrorKind::NoLiquidity, "opposite side of the book is empty");
  if (side == Side::Sell && acct.balance.coin < quantity) {
    throw ExchangeError(ExchangeErrorKind::InsufficientFunds, "not enough coin holdings to sell");
  }
  if (side == Side::Buy && acct.balance.base < q.cost + fill_fee(q.cost, fee_rate)) {
    throw ExchangeError(ExchangeErrorKind::InsufficientFunds, "not enough base currency to buy");
  }

  FillReport r;
  r.coin = coin;
  r.side = side;
  r.requested = quantity;
  r.timestamp = sim_.now(coin);
  try {
    r.trades = sim_.execute_market_order(coin, side, quantity, bot_owner(coin));
  } catch (const NoLiquidity& e) {
    throw ExchangeError(ExchangeErrorKind::NoLiquidity, e.what());
  } catch (const OrderRejected& e) {
    throw ExchangeError(ExchangeErrorKind::InsufficientFunds, e.what());
  }
  for (const Trade& t : r.trades) {
    r.filled += t.quantity;
    r.gross += notional(t.price, t.quantity);
  }
  r.fee = fill_fee(r.gross, fee_rate);
  if (side == Side::Buy) {
    acct.balance.base -= r.gross + r.fee;
    acct.balance.coin += r.filled;
  } else {
    acct.balance.base += r.gross - r.fee;
    acct.balance.coin -= r.filled;
  }
  return r;
}

void SimExchange::fund(CoinId coin, Balance amount) {
  Account& acct = account(coin);
  std::lock_guard lock(acct.mutex);
  if (amount.base < 0 || amount.coin < 0) throw std::invalid_argument("funding must be non-negative");
  acct.balance.base += amount.base;
  acct.balance.coin += amount.coin;
}

Balance SimExchange::balance(CoinId coin) const {
  const Account& acct = account(coin);
  std::lock_guard lock(acct.mutex);
  return acct.balance;
}

std::uint64_t SimExchange::injected_failures() const {
  std::uint64_t n = 0;
  for (const auto& a : accounts_) {
    std::lock_guard lock(a->mutex);
    n += a->failures;
  }
  return n;
}

// ------------------------------------------------------------- ReplayExchange

ReplayExchange::ReplayExchange(RecordedTrades data, std::optional<Millis> start, std::optional<Millis> end)
    : data_(std::move(data)) {
  Millis first = std::numeric_limits<Millis>::max();
  Millis last = std::numeric_limits<Millis>::min();
  for (const auto& tape : data_.tapes) {
    if (tape.empty()) continue;
    first = std::min(first, tape.trades().front().timestamp);
    last = std::max(last, tape.back().timestamp);
  }
  if (first > last) first = last = 0;
  start_ = start.value_or(first);
  end_ = end.value_or(last);
  if (end_ < start_) throw std::invalid_argument("replay window ends before it starts");
  clock_ = start_;
  balances_.assign(data_.coin_names.size(), Balance{});
}

ReplayExchange::~ReplayExchange() = default;

namespace {
struct LaterScheduled {
  template <typename S>
  bool operator()(const S& a, const S& b) const {
    return a.at != b.at ? a.at > b.at : a.seq > b.seq;
  }
};
}  // namespace

void ReplayExchange::schedule(CoinId coin, Millis at, Callback fn) {
  if (coin >= data_.coin_names.size()) unknown_market(coin);
  if (at < clock_) throw std::logic_error("cannot schedule an event in the past");
  queue_.push_back(Scheduled{at, seq_++, coin, std::move(fn)});
  std::push_heap(queue_.begin(), queue_.end(), LaterScheduled{});
}

void ReplayExchange::run(unsigned) {
  while (!queue_.empty() && queue_.front().at <= end_) {
    std::pop_heap(queue_.begin(), queue_.end(), LaterScheduled{});
    Scheduled ev = std::move(queue_.back());
    queue_.pop_back();
    clock_ = ev.at;
    ev.fn();
  }
  clock_ = std::max(clock_, end_);
}

MarketSnapshot ReplayExchange::get_market_state(CoinId coin, Millis since) {
  if (coin >= data_.tapes.size()) unknown_market(coin);
  const TradeTape& tape = data_.tapes[coin];
  MarketSnapshot s;
  s.coin = coin;
  s.now = clock_;
  if (const Trade* last = tape.last_at_or_before(clock_)) {
    s.last_price = last->price;
    s.last_trade_side = last->taker_side;
    s.last_trade_time = last->timestamp;
  }
  s.hourly_volume = tape.volume_between(clock_ - kHour, clock_);
  s.hourly_buy_volume = tape.buy_volume_between(clock_ - kHour, clock_);
  const double hours = static_cast<double>(clock_ - start_) / static_cast<double>(kHour);
  s.average_hourly_volume =
      hours > 0 ? static_cast<double>(tape.volume_between(start_ - 1, clock_)) / hours : 0.0;
  s.window_start = since;
  const auto window = tape.between(since, clock_);
  s.trades.assign(window.begin(), window.end());
  return s;
}

FillReport ReplayExchange::place_order(CoinId coin, Side, Quantity) {
  if (coin >= data_.tapes.size()) unknown_market(coin);
  throw ExchangeError(ExchangeErrorKind::ApiUnavailable, "the replay backend is read-only");
}

void ReplayExchange::fund(CoinId coin, Balance amount) {
  if (coin >= balances_.size()) unknown_market(coin);
  balances_[coin].base += amount.base;
  balances_[coin].coin += amount.coin;
}

Balance ReplayExchange::balance(CoinId coin) const {
  if (coin >= balances_.size()) unknown_market(coin);
  return balances_[coin];
}

}  // namespace cdalab
