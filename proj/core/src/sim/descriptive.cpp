#include "cdalab/sim/descriptive.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "cdalab/text.hpp"

namespace cdalab {

Histogram log_histogram(const std::vector<double>& values, std::size_t bins) {
  Histogram h;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double v : values) {
    if (v > 0.0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi == 0.0) return h;
  if (lo == hi || bins <= 1) {
    h.lower = {lo};
    h.upper = {hi};
    h.counts = {0};
    for (double v : values) h.counts[0] += v > 0.0 ? 1 : 0;
    return h;
  }
  const double a = std::log10(lo);
  const double width = (std::log10(hi) - a) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i < bins; ++i) {
    h.lower.push_back(std::pow(10.0, a + width * static_cast<double>(i)));
    h.upper.push_back(std::pow(10.0, a + width * static_cast<double>(i + 1)));
  }
  h.lower.front() = lo;
  h.upper.back() = hi;
  for (double v : values) {
    if (v <= 0.0) continue;
    auto idx = static_cast<std::size_t>((std::log10(v) - a) / width);
    h.counts[std::min(idx, bins - 1)] += 1;
  }
  return h;
}

double excess_kurtosis(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  if (m2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return m4 / (m2 * m2) - 3.0;
}

double estimated_trades_per_hour(Notional volume, std::uint64_t trades, double hours) {
  if (trades == 0 || hours <= 0.0) return 0.0;
  const double hourly = static_cast<double>(volume) / hours;
  const double mean_size = static_cast<double>(volume) / static_cast<double>(trades);
  return hourly / mean_size;
}

DescriptiveStats describe(const EventLog& log, std::size_t bins) {
  if (log.trades.empty()) throw std::invalid_argument("cannot describe an empty trade log");
  DescriptiveStats s;
  const Millis start = log.start_time;
  const Millis end = std::max(log.end_time, log.trades.back().timestamp);
  s.hours = static_cast<double>(end - start) / static_cast<double>(kHour);
  const std::size_t coins = std::max<std::size_t>(log.coin_names.size(), [&] {
    CoinId m = 0;
    for (const auto& t : log.trades) m = std::max(m, t.coin);
    return static_cast<std::size_t>(m) + 1;
  }());
  s.coin_volume.assign(coins, 0);
  s.coin_trades.assign(coins, 0);
  s.hour_of_day_volume.assign(24, 0.0);

  auto floor_div = [](Millis a, Millis b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const Millis first_day = floor_div(start, kDay);
  const Millis last_day = floor_div(end, kDay);
  for (Millis d = first_day; d <= last_day; ++d) s.day_start.push_back(d * kDay);
  s.daily_volume.assign(s.day_start.size(), 0);

  std::vector<double> sizes;
  sizes.reserve(log.trades.size());
  for (const Trade& t : log.trades) {
    const Notional v = notional(t.price, t.quantity);
    s.total_volume += v;
    s.coin_volume[t.coin] += v;
    s.coin_trades[t.coin] += 1;
    const auto day = static_cast<std::size_t>(floor_div(t.timestamp, kDay) - first_day);
    if (day < s.daily_volume.size()) s.daily_volume[day] += v;
    const Millis in_day = t.timestamp - floor_div(t.timestamp, kDay) * kDay;
    s.hour_of_day_volume[static_cast<std::size_t>(in_day / kHour)] += static_cast<double>(v);
    sizes.push_back(static_cast<double>(v));
  }
  s.trade_count = log.trades.size();
  // Mean over the clock hours covered by the log, counting partial hours pro rata.
  std::array<double, 24> exposure{};
  for (Millis h = floor_div(start, kHour); h * kHour < end; ++h) {
    const Millis from = std::max(start, h * kHour), to = std::min(end, (h + 1) * kHour);
    const auto slot = static_cast<std::size_t>((h % 24 + 24) % 24);
    exposure[slot] += static_cast<double>(to - from) / static_cast<double>(kHour);
  }
  for (std::size_t h = 0; h < 24; ++h) {
    if (exposure[h] > 0.0) s.hour_of_day_volume[h] /= exposure[h];
  }
  std::vector<double> coin_volume(s.coin_volume.begin(), s.coin_volume.end());
  for (std::size_t c = 0; c < coins; ++c) {
    s.coin_trades_per_hour.push_back(estimated_trades_per_hour(s.coin_volume[c], s.coin_trades[c], s.hours));
  }
  s.coin_volume_histogram = log_histogram(coin_volume, bins);
  s.trade_size_histogram = log_histogram(sizes, bins);
  s.coin_volume_excess_kurtosis = excess_kurtosis(coin_volume);
  return s;
}

void write_daily_volume_csv(std::ostream& out, const DescriptiveStats& s) {
  out << "day_start_ms,volume\n";
  for (std::size_t i = 0; i < s.daily_volume.size(); ++i) out << s.day_start[i] << ',' << s.daily_volume[i] << '\n';
}

void write_coin_volume_csv(std::ostream& out, const DescriptiveStats& s, const std::vector<std::string>& coin_names) {
  out << "coin,trades,volume,trades_per_hour\n";
  for (std::size_t c = 0; c < s.coin_volume.size(); ++c) {
    out << (c < coin_names.size() ? coin_names[c] : default_coin_name(static_cast<CoinId>(c))) << ','
        << s.coin_trades[c] << ',' << s.coin_volume[c] << ',' << format_double(s.coin_trades_per_hour[c]) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "lower,upper,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << format_double(h.lower[i]) << ',' << format_double(h.upper[i]) << ',' << h.counts[i] << '\n';
  }
}

void write_hour_profile_csv(std::ostream& out, const DescriptiveStats& s) {
  out << "hour_utc,mean_volume\n";
  for (std::size_t h = 0; h < s.hour_of_day_volume.size(); ++h) {
    out << h << ',' << format_double(s.hour_of_day_volume[h]) << '\n';
  }
}

}  // namespace cdalab
