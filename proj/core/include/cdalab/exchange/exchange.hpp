#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cdalab/market/trade_io.hpp"
#include "cdalab/sim/engine.hpp"

namespace cdalab {

enum class ExchangeErrorKind { ApiUnavailable, NoLiquidity, InsufficientFunds, UnknownMarket, RateLimited };

std::string_view to_string(ExchangeErrorKind k);

class ExchangeError : public std::runtime_error {
 public:
  ExchangeError(ExchangeErrorKind kind, const std::string& what);
  [[nodiscard]] ExchangeErrorKind kind() const { return kind_; }

 private:
  ExchangeErrorKind kind_;
};

/// One trading account per coin market: base currency and coin lots.
struct Balance {
  Notional base = 0;
  Quantity coin = 0;

  friend bool operator==(const Balance&, const Balance&) = default;
};

struct FillReport {
  CoinId coin = 0;
  Side side = Side::Buy;
  Quantity requested = 0;
  Quantity filled = 0;
  /// Sum of price x quantity over fills, and the fee on that sum charged on
  /// top (buy) or withheld (sell).
  Notional gross = 0;
  Notional fee = 0;
  Millis timestamp = 0;
  std::vector<Trade> trades;
};

/// Fee on a gross amount, rounded up to a whole base unit.
Notional fill_fee(Notional gross, double fee_rate);

/// Backend-neutral exchange as seen by one bot per coin. Time is the
/// backend's simulated clock; callbacks scheduled for a coin run serially.
class Exchange {
 public:
  using Callback = std::function<void()>;
  virtual ~Exchange() = default;

  [[nodiscard]] virtual const std::vector<std::string>& coin_names() const = 0;
  [[nodiscard]] std::uint32_t coin_count() const { return static_cast<std::uint32_t>(coin_names().size()); }
  [[nodiscard]] virtual Millis start_time() const = 0;
  [[nodiscard]] virtual Millis end_time() const = 0;
  [[nodiscard]] virtual Millis now(CoinId coin) const = 0;
  virtual void schedule(CoinId coin, Millis at, Callback fn) = 0;
  /// Processes scheduled work up to end_time().
  virtual void run(unsigned threads = 1) = 0;

  /// Owner id that marks this coin's bot trades on the tape.
  [[nodiscard]] virtual OwnerId bot_owner(CoinId coin) const = 0;

  /// Market state with trades in (since, now]. Throws ExchangeError.
  virtual MarketSnapshot get_market_state(CoinId coin, Millis since) = 0;
  /// Marketable order for the coin's bot account. Throws ExchangeError.
  virtual FillReport place_order(CoinId coin, Side side, Quantity quantity) = 0;

  virtual void fund(CoinId coin, Balance amount) = 0;
  [[nodiscard]] virtual Balance balance(CoinId coin) const = 0;

  /// False for read-only backends, which reject every order.
  [[nodiscard]] virtual bool supports_orders() const = 0;
};

struct FaultConfig {
  /// Probability that any single API call fails with ApiUnavailable.
  double api_failure_rate = 0.0;
  std::uint64_t seed = 0;
};

/// Exchange backed by the simulator. Bot owners are kExternalOwnerBase + coin.
class SimExchange final : public Exchange {
 public:
  SimExchange(Simulation& sim, FaultConfig faults = {});

  [[nodiscard]] const std::vector<std::string>& coin_names() const override { return sim_.coin_names(); }
  [[nodiscard]] Millis start_time() const override { return sim_.config().start_time; }
  [[nodiscard]] Millis end_time() const override { return sim_.config().end_time(); }
  [[nodiscard]] Millis now(CoinId coin) const override { return sim_.now(coin); }
  void schedule(CoinId coin, Millis at, Callback fn) override { sim_.schedule(coin, at, std::move(fn)); }
  void run(unsigned threads = 1) override { sim_.run(threads); }
  [[nodiscard]] OwnerId bot_owner(CoinId coin) const override { return kExternalOwnerBase + coin; }

  MarketSnapshot get_market_state(CoinId coin, Millis since) override;
  FillReport place_order(CoinId coin, Side side, Quantity quantity) override;
  void fund(CoinId coin, Balance amount) override;
  [[nodiscard]] Balance balance(CoinId coin) const override;
  [[nodiscard]] bool supports_orders() const override { return true; }

  /// Calls that failed by injection so far.
  [[nodiscard]] std::uint64_t injected_failures() const;

 private:
  struct Account {
    mutable std::mutex mutex;
    Balance balance;
    Rng faults;
    std::uint64_t failures = 0;
  };

  Account& account(CoinId coin);
  const Account& account(CoinId coin) const;
  void maybe_fail(Account& acct, const char* call);

  Simulation& sim_;
  FaultConfig faults_;
  std::vector<std::unique_ptr<Account>> accounts_;
};

/// Read-only exchange over a recorded trade history. Market state at time t
/// holds exactly the recorded trades with timestamp <= t; order books are not
/// recorded, so best bid and ask are absent. Every order fails with
/// ApiUnavailable.
class ReplayExchange final : public Exchange {
 public:
  /// Time runs over [start, end]; by default from the first to the last recorded trade.
  explicit ReplayExchange(RecordedTrades data, std::optional<Millis> start = std::nullopt,
                          std::optional<Millis> end = std::nullopt);
  ~ReplayExchange() override;

  [[nodiscard]] const std::vector<std::string>& coin_names() const override { return data_.coin_names; }
  [[nodiscard]] Millis start_time() const override { return start_; }
  [[nodiscard]] Millis end_time() const override { return end_; }
  [[nodiscard]] Millis now(CoinId) const override { return clock_; }
  void schedule(CoinId coin, Millis at, Callback fn) override;
  void run(unsigned threads = 1) override;
  [[nodiscard]] OwnerId bot_owner(CoinId coin) const override { return kExternalOwnerBase + coin; }

  MarketSnapshot get_market_state(CoinId coin, Millis since) override;
  FillReport place_order(CoinId coin, Side side, Quantity quantity) override;
  void fund(CoinId coin, Balance amount) override;
  [[nodiscard]] Balance balance(CoinId coin) const override;
  [[nodiscard]] bool supports_orders() const override { return false; }

  [[nodiscard]] const RecordedTrades& data() const { return data_; }

 private:
  struct Scheduled {
    Millis at;
    std::uint64_t seq;
    CoinId coin;
    Callback fn;
  };

  const RecordedTrades data_;
  Millis start_ = 0;
  Millis end_ = 0;
  Millis clock_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<Scheduled> queue_;
  std::vector<Balance> balances_;
};

}  // namespace cdalab
