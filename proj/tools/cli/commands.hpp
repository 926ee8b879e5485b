#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cdalab/exchange/exchange.hpp"
#include "cdalab/harness/harness.hpp"
#include "cdalab/sim/engine.hpp"
#include "cdalab/stats/tests.hpp"

namespace cdalab::cli {

enum class Backend { Sim, Replay };

struct ExperimentSetup {
  SimConfig sim;
  HarnessConfig harness;
  double api_failure_rate = 0.0;
  Backend backend = Backend::Sim;
  /// Trade history for the replay backend.
  std::string replay_trades;
  /// Canonical config text, for the manifest digest.
  std::string canonical;
};

/// Reads simulation and harness keys (`harness.*`, `api_failure_rate`,
/// `replay_trades`) and rejects any other key with its line number. A seed
/// override replaces both the simulation and the harness seed.
ExperimentSetup load_setup(const std::string& config_path, std::optional<std::uint64_t> seed = std::nullopt);
ExperimentSetup parse_setup(ConfigFile& file, std::optional<std::uint64_t> seed = std::nullopt);

/// Harness keys only; leaves other keys untouched.
HarnessConfig read_harness_config(ConfigFile& file);

/// Builds the backend and runs the protocol over it.
ExperimentResult run_setup(const ExperimentSetup& setup, unsigned threads = 1);

struct AnalyzeOptions {
  enum class Split { None, Exploratory, Confirmatory };
  Split split = Split::None;
  std::uint64_t split_seed = 1;
  std::size_t bootstrap_b = 200;
  std::uint64_t seed = 1;
  double bonferroni_m = 18.0;
  /// all, effects, regression, bootstrap, randomization, heterogeneity,
  /// composition, observability, volume, impact
  std::string table = "all";
  double ftt_rate = 0.0;
  std::uint64_t ftt_seed = 1;
  bool exact_t = false;
  bool coin_blocks = false;
  unsigned threads = 1;
};

/// Writes the requested reports into `out_dir` and returns their paths.
/// With table "all", analyses the data cannot support are skipped with a
/// warning on `log`; a single requested table fails instead.
std::vector<std::filesystem::path> analyze(std::vector<TrialRecord> trials,
                                           const std::vector<CoinAttributes>& attributes,
                                           const AnalyzeOptions& options, const std::filesystem::path& out_dir,
                                           std::ostream& log);

}  // namespace cdalab::cli
