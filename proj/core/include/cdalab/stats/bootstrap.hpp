#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cdalab/harness/trial.hpp"

namespace cdalab {

using Statistic = std::function<double(std::span<const double>)>;

/// `replicates` values of `statistic` on resamples of `values` drawn with
/// replacement. Replicate b draws from the stream (seed, Bootstrap, b).
std::vector<double> bootstrap_distribution(std::span<const double> values, const Statistic& statistic,
                                           std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

struct BootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  /// Resample whole coins instead of trials within each condition.
  bool coin_blocks = false;
  unsigned threads = 1;
};

struct BootstrapTable {
  /// "<window> <arm> <dv> effect" and "... t" for every effect-table cell.
  std::vector<std::string> columns;
  /// One row per replicate.
  std::vector<std::vector<double>> samples;
};

/// Effect-table statistics over trial-level resamples of the analysed trials
/// (with replacement within each condition, or by coin blocks).
BootstrapTable bootstrap_effects(const std::vector<TrialRecord>& trials, const BootstrapOptions& options);

void write_bootstrap_csv(std::ostream& out, const BootstrapTable& table);

}  // namespace cdalab
