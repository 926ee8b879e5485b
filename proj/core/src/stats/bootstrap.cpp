#include "cdalab/stats/bootstrap.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "cdalab/sim/rng.hpp"
#include "cdalab/stats/effects.hpp"
#include "cdalab/text.hpp"

namespace cdalab {

namespace {

/// Runs body(b) for b in [0, n) on up to `threads` workers.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t b = 0; b < n; ++b) body(b);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < n; b += threads) body(b);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<double> bootstrap_distribution(std::span<const double> values, const Statistic& statistic,
                                           std::size_t replicates, std::uint64_t seed, unsigned threads) {
  if (replicates < 1) throw std::invalid_argument("bootstrap needs at least one replicate");
  if (values.empty()) throw std::invalid_argument("bootstrap needs data");
  std::vector<double> out(replicates);
  parallel_for(replicates, threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, Stream::Bootstrap, {b}));
    std::vector<double> sample(values.size());
    const auto hi = static_cast<std::int64_t>(values.size()) - 1;
    for (auto& v : sample) v = values[static_cast<std::size_t>(rng.uniform_int(0, hi))];
    out[b] = statistic(sample);
  });
  return out;
}

namespace {

constexpr std::size_t kCells = 18;

struct Cell {
  int window;
  Condition arm;
  Dv dv;
};

std::array<Cell, kCells> cells() {
  std::array<Cell, kCells> c{};
  std::size_t i = 0;
  for (int w = 1; w <= 3; ++w) {
    for (Condition arm : {Condition::Buy, Condition::Sell}) {
      for (Dv dv : arm_dvs(arm)) c[i++] = Cell{w, arm, dv};
    }
  }
  return c;
}

/// Per analysed trial, the value of every cell DV (NaN when undefined).
struct TrialValues {
  Condition condition;
  std::uint32_t coin;
  std::array<double, kCells> treat;    // the cell's DV when the trial is in the cell's arm
  std::array<double, kCells> control;  // the cell's DV when the trial is a control
};

struct Sums {
  double n = 0, s = 0, ss = 0;
  void add(double v, double w) {
    n += w;
    s += w * v;
    ss += w * v * v;
  }
};

}  // namespace

BootstrapTable bootstrap_effects(const std::vector<TrialRecord>& trials, const BootstrapOptions& options) {
  if (options.replicates < 1) throw std::invalid_argument("bootstrap needs at least one replicate");
  const auto layout = cells();
  BootstrapTable table;
  for (const auto& c : layout) {
    const std::string base = std::string(window_label(c.window)) + " " + (c.arm == Condition::Buy ? "Buy" : "Sell") +
                             " " + std::string(dv_label(c.dv));
    table.columns.push_back(base + " effect");
    table.columns.push_back(base + " t");
  }

  const DvSet set = extract_dvs(trials);
  std::vector<TrialValues> rows;
  std::vector<std::size_t> row_of_trial(trials.size(), SIZE_MAX);
  const double nan = std::nan("");
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!analysed(trials[i])) continue;
    row_of_trial[i] = rows.size();
    TrialValues v{trials[i].condition, 0, {}, {}};
    v.treat.fill(nan);
    v.control.fill(nan);
    rows.push_back(v);
  }
  // Observations are emitted trial by trial, so walk them alongside the trials.
  {
    std::size_t t = 0;
    for (const auto& o : set.observations) {
      while (t < trials.size() && trials[t].trial_id != o.trial_id) ++t;
      if (t == trials.size()) throw std::logic_error("observation order does not follow the trial log");
      if (row_of_trial[t] == SIZE_MAX) continue;
      TrialValues& v = rows[row_of_trial[t]];
      v.coin = o.coin;
      for (std::size_t c = 0; c < kCells; ++c) {
        if (layout[c].window != o.monitor) continue;
        const auto y = dv_value(o, layout[c].dv);
        if (!y) continue;
        if (o.condition == layout[c].arm) v.treat[c] = *y;
        if (o.condition == Condition::Control) v.control[c] = *y;
      }
    }
  }

  std::array<std::vector<std::size_t>, 3> by_condition;
  std::vector<std::vector<std::size_t>> by_coin(set.coins.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    by_condition[static_cast<std::size_t>(rows[i].condition)].push_back(i);
    by_coin[rows[i].coin].push_back(i);
  }

  table.samples.assign(options.replicates, std::vector<double>(2 * kCells, nan));
  parallel_for(options.replicates, options.threads, [&](std::size_t b) {
    Rng rng(derive_seed(options.seed, Stream::Bootstrap, {b}));
    std::vector<double> weight(rows.size(), 0.0);
    if (options.coin_blocks) {
      const auto hi = static_cast<std::int64_t>(by_coin.size()) - 1;
      for (std::size_t k = 0; k < by_coin.size(); ++k) {
        for (std::size_t i : by_coin[static_cast<std::size_t>(rng.uniform_int(0, hi))]) weight[i] += 1.0;
      }
    } else {
      for (const auto& group : by_condition) {
        if (group.empty()) continue;
        const auto hi = static_cast<std::int64_t>(group.size()) - 1;
        for (std::size_t k = 0; k < group.size(); ++k) weight[group[static_cast<std::size_t>(rng.uniform_int(0, hi))]] += 1.0;
      }
    }
    std::array<Sums, kCells> treat{}, control{};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (weight[i] == 0.0) continue;
      for (std::size_t c = 0; c < kCells; ++c) {
        if (!std::isnan(rows[i].treat[c])) treat[c].add(rows[i].treat[c], weight[i]);
        if (!std::isnan(rows[i].control[c])) control[c].add(rows[i].control[c], weight[i]);
      }
    }
    auto& out = table.samples[b];
    for (std::size_t c = 0; c < kCells; ++c) {
      const Sums& t = treat[c];
      const Sums& u = control[c];
      if (t.n < 1 || u.n < 1) continue;
      const double mt = t.s / t.n, mc = u.s / u.n;
      const double vt = t.n > 1 ? std::max(0.0, (t.ss - t.n * mt * mt) / (t.n - 1)) : 0.0;
      const double vc = u.n > 1 ? std::max(0.0, (u.ss - u.n * mc * mc) / (u.n - 1)) : 0.0;
      out[2 * c] = mt - mc;
      out[2 * c + 1] = welch_t(mt, vt, t.n, mc, vc, u.n);
    }
  });
  return table;
}

void write_bootstrap_csv(std::ostream& out, const BootstrapTable& table) {
  out << "replicate";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (std::size_t b = 0; b < table.samples.size(); ++b) {
    out << b + 1;
    for (double v : table.samples[b]) out << ',' << (std::isnan(v) ? std::string() : format_double(v));
    out << '\n';
  }
}

}  // namespace cdalab
