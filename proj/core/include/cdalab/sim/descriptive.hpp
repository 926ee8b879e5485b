#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cdalab/sim/engine.hpp"

namespace cdalab {

/// Bins are equal-width on a log10 scale between the smallest and largest
/// positive value; a sample with one distinct value gets a single bin.
struct Histogram {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::uint64_t> counts;
};

Histogram log_histogram(const std::vector<double>& values, std::size_t bins);

/// Sample excess kurtosis m4 / m2^2 - 3; NaN for fewer than two values or zero variance.
double excess_kurtosis(const std::vector<double>& values);

struct DescriptiveStats {
  double hours = 0.0;
  std::uint64_t trade_count = 0;
  Notional total_volume = 0;
  /// Volume per UTC calendar day, the first entry being the day of start_time.
  std::vector<Millis> day_start;
  std::vector<Notional> daily_volume;
  std::vector<Notional> coin_volume;
  std::vector<std::uint64_t> coin_trades;
  /// Average hourly volume divided by average trade size, per coin.
  std::vector<double> coin_trades_per_hour;
  /// Mean volume per hour of the UTC day, over all coins.
  std::vector<double> hour_of_day_volume;
  Histogram coin_volume_histogram;
  Histogram trade_size_histogram;
  double coin_volume_excess_kurtosis = 0.0;
};

/// Throws std::invalid_argument on an empty log.
DescriptiveStats describe(const EventLog& log, std::size_t bins = 20);

/// Average hourly volume divided by mean trade size.
double estimated_trades_per_hour(Notional volume, std::uint64_t trades, double hours);

void write_daily_volume_csv(std::ostream& out, const DescriptiveStats& s);
void write_coin_volume_csv(std::ostream& out, const DescriptiveStats& s, const std::vector<std::string>& coin_names);
void write_histogram_csv(std::ostream& out, const Histogram& h);
void write_hour_profile_csv(std::ostream& out, const DescriptiveStats& s);

}  // namespace cdalab
