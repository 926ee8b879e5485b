#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cdalab/market/order_book.hpp"

using namespace cdalab;

namespace {

std::vector<Order> order_flow(std::size_t n, int spread) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> offset(-spread, spread);
  std::uniform_int_distribution<Quantity> qty(1, 50);
  std::vector<Order> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Order& o = out[i];
    o.id = i + 1;
    o.side = rng() & 1 ? Side::Buy : Side::Sell;
    o.price = Price{1000 + offset(rng)};
    o.quantity = qty(rng);
    o.timestamp = static_cast<Millis>(i);
    o.owner = 1 + rng() % 8;
  }
  return out;
}

// Mixed resting and crossing limit orders around a common price.
void BM_LimitOrderFlow(benchmark::State& state) {
  const auto flow = order_flow(static_cast<std::size_t>(state.range(0)), 20);
  for (auto _ : state) {
    OrderBook book;
    std::size_t trades = 0;
    for (const Order& o : flow) trades += book.place_limit_order(o).size();
    benchmark::DoNotOptimize(trades);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LimitOrderFlow)->Arg(1'000)->Arg(10'000)->Arg(100'000);

// Market orders against a deep, pre-built book.
void BM_MarketSweep(benchmark::State& state) {
  OrderBook seed;
  for (int i = 0; i < 2000; ++i) {
    Order o;
    o.id = static_cast<OrderId>(i + 1);
    o.side = Side::Sell;
    o.price = Price{1000 + i % 200};
    o.quantity = 10;
    o.owner = 1;
    seed.place_limit_order(o);
  }
  for (auto _ : state) {
    state.PauseTiming();
    OrderBook book = seed;
    state.ResumeTiming();
    for (int i = 0; i < 100; ++i) benchmark::DoNotOptimize(book.place_market_order(Side::Buy, 150, 2, i));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_MarketSweep);

}  // namespace

BENCHMARK_MAIN();
