#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>

#include "cdalab/error.hpp"
#include "cdalab/sim/descriptive.hpp"
#include "cdalab/stats/effects.hpp"
#include "cdalab/stats/reports.hpp"
#include "cdalab/text.hpp"
#include "commands.hpp"
#include "manifest.hpp"

#ifndef CDALAB_VERSION
#define CDALAB_VERSION "unknown"
#endif

namespace cdalab::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  unsigned threads = 1;
};

RunManifest start_manifest(const std::string& command, const std::vector<std::string>& args) {
  RunManifest m;
  m.command = command;
  m.arguments = args;
  m.code_version = CDALAB_VERSION;
  m.started_at = utc_timestamp();
  return m;
}

void finish(const fs::path& dir, RunManifest m, const std::vector<fs::path>& outputs) {
  m.finished_at = utc_timestamp();
  write_manifest(dir, std::move(m), outputs);
}

fs::path write_file(const fs::path& path, const std::function<void(std::ostream&)>& emit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  emit(out);
  return path;
}

int cmd_simulate(const Common& c, const std::vector<std::string>& args, std::ostream& out) {
  RunManifest m = start_manifest("simulate", args);
  ExperimentSetup s = load_setup(c.config, c.seed);
  m.config_digest = sha256_text(s.canonical);
  m.seed = s.sim.seed;
  m.inputs.push_back(describe_file(c.config));
  s.sim.record_orders = true;
  Simulation sim(s.sim);
  sim.run(c.threads);
  const EventLog log = sim.event_log();

  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::vector<fs::path> files;
  files.push_back(write_file(dir / "trades.csv", [&](std::ostream& o) {
    write_trade_history(o, log.trades, sim.coin_names());
  }));
  files.push_back(write_file(dir / "orders.csv", [&](std::ostream& o) {
    write_order_events(o, log.orders, sim.coin_names());
  }));
  if (!log.trades.empty()) {
    const DescriptiveStats d = describe(log);
    files.push_back(write_file(dir / "daily_volume.csv", [&](std::ostream& o) { write_daily_volume_csv(o, d); }));
    files.push_back(
        write_file(dir / "coin_volume.csv", [&](std::ostream& o) { write_coin_volume_csv(o, d, sim.coin_names()); }));
    files.push_back(write_file(dir / "hour_profile.csv", [&](std::ostream& o) { write_hour_profile_csv(o, d); }));
    files.push_back(write_file(dir / "coin_volume_hist.csv",
                               [&](std::ostream& o) { write_histogram_csv(o, d.coin_volume_histogram); }));
    files.push_back(write_file(dir / "trade_size_hist.csv",
                               [&](std::ostream& o) { write_histogram_csv(o, d.trade_size_histogram); }));
    out << "trades: " << d.trade_count << "\nvolume: " << d.total_volume << "\nhours: " << format_double(d.hours)
        << "\ncoin volume excess kurtosis: " << format_double(d.coin_volume_excess_kurtosis) << '\n';
  } else {
    out << "trades: 0\n";
  }
  finish(dir, std::move(m), files);
  return kExitOk;
}

void write_summary(std::ostream& o, const ExperimentSummary& s, std::size_t trials) {
  o << "quantity,value\n";
  o << "trials," << trials << '\n';
  o << "arm_buy," << s.arm_counts[0] << '\n';
  o << "arm_sell," << s.arm_counts[1] << '\n';
  o << "arm_control," << s.arm_counts[2] << '\n';
  o << "failures_to_treat," << s.failures_to_treat << '\n';
  o << "attempts," << s.attempts << '\n';
  o << "ineligible_no_trade," << s.ineligible_no_trade << '\n';
  o << "ineligible_funds," << s.ineligible_funds << '\n';
  o << "state_read_failures," << s.state_read_failures << '\n';
  o << "missing_monitors," << s.missing_monitors << '\n';
}

int cmd_experiment(const Common& c, const std::string& backend, bool control_only,
                   const std::vector<std::string>& args, std::ostream& out) {
  RunManifest m = start_manifest("experiment", args);
  ExperimentSetup s = load_setup(c.config, c.seed);
  s.backend = backend == "replay" ? Backend::Replay : Backend::Sim;
  if (control_only) s.harness.control_only = true;
  m.config_digest = sha256_text(s.canonical);
  m.seed = s.sim.seed;
  m.inputs.push_back(describe_file(c.config));
  if (s.backend == Backend::Replay && !s.replay_trades.empty() && fs::exists(s.replay_trades)) {
    m.inputs.push_back(describe_file(s.replay_trades));
  }
  const ExperimentResult r = run_setup(s, c.threads);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::vector<fs::path> files;
  files.push_back(write_file(dir / "trials.csv", [&](std::ostream& o) { write_trial_log(o, r.trials); }));
  files.push_back(
      write_file(dir / "coin_attributes.csv", [&](std::ostream& o) { write_coin_attributes_csv(o, r.coin_attributes); }));
  files.push_back(write_file(dir / "summary.csv", [&](std::ostream& o) { write_summary(o, r.summary, r.trials.size()); }));
  const auto& a = r.summary.arm_counts;
  out << "trials: " << r.trials.size() << " (buy " << a[0] << ", sell " << a[1] << ", control " << a[2] << ")\n";
  out << "failures to treat: " << r.summary.failures_to_treat << '\n';
  out << "state read failures: " << r.summary.state_read_failures << '\n';
  out << "missing monitors: " << r.summary.missing_monitors << '\n';
  finish(dir, std::move(m), files);
  return kExitOk;
}

int cmd_analyze(const std::string& log_path, std::string attributes_path, const Common& c, AnalyzeOptions o,
                const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunManifest m = start_manifest("analyze", args);
  m.seed = o.seed;
  const auto trials = load_trial_log(log_path);
  m.inputs.push_back(describe_file(log_path));
  if (attributes_path.empty()) {
    const fs::path sibling = fs::path(log_path).parent_path() / "coin_attributes.csv";
    if (fs::exists(sibling)) attributes_path = sibling.string();
  }
  std::vector<CoinAttributes> attributes;
  if (!attributes_path.empty()) {
    std::ifstream in(attributes_path);
    if (!in) throw DataError("cannot open '" + attributes_path + "'");
    attributes = read_coin_attributes_csv(in, attributes_path);
    m.inputs.push_back(describe_file(attributes_path));
  }
  o.threads = c.threads;
  m.config_digest = sha256_text("split=" + std::to_string(static_cast<int>(o.split)) +
                                " split_seed=" + std::to_string(o.split_seed) +
                                " bootstrap_b=" + std::to_string(o.bootstrap_b) + " bonferroni_m=" +
                                format_double(o.bonferroni_m) + " table=" + o.table + " ftt_rate=" +
                                format_double(o.ftt_rate) + " ftt_seed=" + std::to_string(o.ftt_seed) +
                                " exact_t=" + std::to_string(o.exact_t) + " coin_blocks=" + std::to_string(o.coin_blocks));
  const fs::path dir(c.out);
  const auto files = analyze(trials, attributes, o, dir, err);
  for (const auto& f : files) out << "wrote " << f.generic_string() << '\n';
  finish(dir, std::move(m), files);
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> v;
  for (auto f : split_fields(s, ',')) v.emplace_back(trim(f));
  return v;
}

int cmd_calibrate(const Common& c, const std::string& param, const std::string& values, std::size_t replicates,
                  const std::vector<std::string>& args, std::ostream& out) {
  RunManifest m = start_manifest("calibrate", args);
  m.inputs.push_back(describe_file(c.config));
  const std::uint64_t base_seed = c.seed.value_or(1);
  m.seed = base_seed;
  const auto grid = param.empty() ? std::vector<std::string>{""} : split_list(values);
  if (!param.empty() && grid.empty()) throw std::invalid_argument("--values is empty");

  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "value,seed,trials,buy_raises_price,sell_lowers_price,control_trade_prob_15min,"
         "buy_prob_control_15min,buy_prob_effect_15min,buy_prob_t_15min,sell_prob_effect_15min,trades_per_coin_hour\n";
  for (const auto& value : grid) {
    for (std::size_t r = 0; r < replicates; ++r) {
      ConfigFile f = ConfigFile::load(c.config);
      if (!param.empty()) {
        if (!f.has(param)) throw DataError("config has no key '" + param + "' to vary");
        f.set(param, value);
      }
      ExperimentSetup s = parse_setup(f, base_seed + r);
      if (m.config_digest.empty()) m.config_digest = sha256_text(s.canonical);
      Simulation sim(s.sim);
      SimExchange ex(sim, FaultConfig{s.api_failure_rate, s.sim.seed});
      const ExperimentResult res = run_experiment(ex, s.harness, c.threads);
      const ImpactRates p = impact_rates(res.trials);
      const EffectTable t = build_effect_table(extract_dvs(res.trials));
      std::uint64_t trades = 0;
      for (CoinId k = 0; k < sim.coin_count(); ++k) trades += sim.book(k).tape().size();
      const double coin_hours = static_cast<double>(sim.coin_count()) * static_cast<double>(s.sim.duration) / kHour;
      csv << value << ',' << s.sim.seed << ',' << res.trials.size() << ',' << format_double(p.buy_raises) << ','
          << format_double(p.sell_lowers) << ',' << format_double(p.any_trade_15) << ','
          << format_double(t.rows[0].result.control_mean) << ',' << format_double(t.rows[0].result.mean_effect) << ','
          << format_double(t.rows[0].result.t_stat) << ',' << format_double(t.rows[3].result.mean_effect) << ','
          << format_double(static_cast<double>(trades) / coin_hours) << '\n';
      out << (param.empty() ? "" : param + "=" + value + " ") << "seed " << s.sim.seed << ": trials "
          << res.trials.size() << ", buy raises " << format_double(p.buy_raises) << ", sell lowers "
          << format_double(p.sell_lowers) << ", trade prob " << format_double(p.any_trade_15) << ", buy effect "
          << format_double(t.rows[0].result.mean_effect) << " (t " << format_double(t.rows[0].result.t_stat) << ")\n";
    }
  }
  const auto path = write_file(dir / "calibration.csv", [&](std::ostream& o) { o << csv.str(); });
  finish(dir, std::move(m), {path});
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Peer-influence experiments on simulated continuous double auction markets", "cdalab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CDALAB_VERSION);

  Common common;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "Configuration file (key = value)");
    if (config_required) opt->required();
    sub->add_option("--seed", common.seed, "Seed overriding the config");
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", common.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 256u));
  };

  auto* simulate = app.add_subcommand("simulate", "Run the market simulator and write logs and descriptive CSVs");
  add_common(simulate, true);

  std::string backend = "sim";
  bool control_only = false;
  auto* experiment = app.add_subcommand("experiment", "Run the intervention protocol and write the trial log");
  add_common(experiment, true);
  experiment->add_option("--backend", backend, "Exchange backend")
      ->check(CLI::IsMember({"sim", "replay"}))
      ->capture_default_str();
  experiment->add_flag("--control-only", control_only, "Observational mode: every trial is a control");

  std::string log_path, attributes_path, split = "none";
  AnalyzeOptions ao;
  auto* analyze_cmd = app.add_subcommand("analyze", "Analyse a trial log into CSV reports");
  add_common(analyze_cmd, false);
  analyze_cmd->add_option("log", log_path, "Trial log")->required();
  analyze_cmd->add_option("--attributes", attributes_path, "Coin attributes CSV (default: next to the log)");
  analyze_cmd->add_option("--split", split, "Dataset half to analyse")
      ->check(CLI::IsMember({"none", "exploratory", "confirmatory"}))
      ->capture_default_str();
  analyze_cmd->add_option("--split-seed", ao.split_seed, "Seed of the dataset split")->capture_default_str();
  analyze_cmd->add_option("--bootstrap-b", ao.bootstrap_b, "Bootstrap replicates (0 skips)")->capture_default_str();
  analyze_cmd->add_option("--bonferroni-m", ao.bonferroni_m, "Bonferroni family size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--table", ao.table, "Report to produce")
      ->check(CLI::IsMember({"all", "effects", "regression", "bootstrap", "randomization", "heterogeneity",
                             "composition", "observability", "volume", "impact"}))
      ->capture_default_str();
  analyze_cmd->add_option("--ftt-rate", ao.ftt_rate, "Simulated failure-to-treat rate for controls")
      ->check(CLI::Range(0.0, 1.0));
  analyze_cmd->add_option("--ftt-seed", ao.ftt_seed, "Seed of the simulated failures to treat");
  analyze_cmd->add_flag("--exact-t", ao.exact_t, "Student t p-values instead of the normal approximation");
  analyze_cmd->add_flag("--coin-blocks", ao.coin_blocks, "Bootstrap whole coins instead of trials");

  std::string param, values;
  std::size_t replicates = 1;
  auto* calibrate = app.add_subcommand("calibrate", "Grid search of one config key against calibration targets");
  add_common(calibrate, true);
  calibrate->add_option("--param", param, "Config key to vary");
  calibrate->add_option("--values", values, "Comma-separated values of --param");
  calibrate->add_option("--replicates", replicates, "Seeds per grid value")->capture_default_str()->check(CLI::PositiveNumber);

  std::vector<std::string> argv_store = {"cdalab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common, args, out);
    if (experiment->parsed()) return cmd_experiment(common, backend, control_only, args, out);
    if (analyze_cmd->parsed()) {
      ao.split = split == "exploratory"    ? AnalyzeOptions::Split::Exploratory
                 : split == "confirmatory" ? AnalyzeOptions::Split::Confirmatory
                                           : AnalyzeOptions::Split::None;
      if (common.seed) ao.seed = *common.seed;
      return cmd_analyze(log_path, attributes_path, common, ao, args, out, err);
    }
    if (calibrate->parsed()) return cmd_calibrate(common, param, values, replicates, args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace cdalab::cli
