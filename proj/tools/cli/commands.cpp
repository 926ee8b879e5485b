#include "commands.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "cdalab/error.hpp"
#include "cdalab/stats/bootstrap.hpp"
#include "cdalab/stats/effects.hpp"
#include "cdalab/stats/regression.hpp"
#include "cdalab/stats/reports.hpp"
#include "cdalab/text.hpp"

namespace cdalab::cli {

namespace {

Millis minutes(ConfigFile& f, const std::string& key, Millis fallback) {
  const auto v = f.take_double(key);
  if (!v) return fallback;
  if (!(*v >= 0.0)) throw ParseError(f.source(), f.line_of(key), "invalid value for key '" + key + "': negative");
  return static_cast<Millis>(std::llround(*v * static_cast<double>(kMinute)));
}

Notional amount(ConfigFile& f, const std::string& key, Notional fallback) {
  const auto v = f.take_int(key);
  if (!v) return fallback;
  if (*v < 0) throw ParseError(f.source(), f.line_of(key), "invalid value for key '" + key + "': negative");
  return *v;
}

}  // namespace

HarnessConfig read_harness_config(ConfigFile& f) {
  HarnessConfig h;
  h.initial_wait_min = minutes(f, "harness.initial_wait_min_minutes", h.initial_wait_min);
  h.initial_wait_max = minutes(f, "harness.initial_wait_max_minutes", h.initial_wait_max);
  h.max_gap = minutes(f, "harness.max_gap_minutes", h.max_gap);
  h.min_trade_size = amount(f, "harness.min_trade_size", h.min_trade_size);
  h.max_trade_size = amount(f, "harness.max_trade_size", h.max_trade_size);
  h.base_funding = amount(f, "harness.base_funding", h.base_funding);
  h.coin_funding_value = amount(f, "harness.coin_funding_value", h.coin_funding_value);
  h.min_tradeable_value = amount(f, "harness.min_tradeable_value", h.min_tradeable_value);
  if (auto v = f.take_bool("harness.control_only")) h.control_only = *v;
  return h;
}

ExperimentSetup parse_setup(ConfigFile& f, std::optional<std::uint64_t> seed) {
  if (seed) f.set("seed", std::to_string(*seed));
  ExperimentSetup s;
  s.canonical = f.canonical_text();
  s.sim = read_sim_config(f);
  s.harness = read_harness_config(f);
  s.harness.seed = s.sim.seed;
  if (auto v = f.take_double("api_failure_rate")) {
    if (!(*v >= 0.0 && *v <= 1.0)) {
      throw ParseError(f.source(), f.line_of("api_failure_rate"), "invalid value for key 'api_failure_rate'");
    }
    s.api_failure_rate = *v;
  }
  if (auto v = f.take_string("replay_trades")) s.replay_trades = *v;
  f.ensure_all_consumed();
  return s;
}

ExperimentSetup load_setup(const std::string& config_path, std::optional<std::uint64_t> seed) {
  ConfigFile f = ConfigFile::load(config_path);
  ExperimentSetup s = parse_setup(f, seed);
  if (!s.replay_trades.empty()) {
    const std::filesystem::path p(s.replay_trades);
    if (p.is_relative()) s.replay_trades = (std::filesystem::path(config_path).parent_path() / p).string();
  }
  return s;
}

ExperimentResult run_setup(const ExperimentSetup& s, unsigned threads) {
  if (s.backend == Backend::Replay) {
    if (s.replay_trades.empty()) throw DataError("the replay backend needs 'replay_trades' in the config");
    std::ifstream in(s.replay_trades);
    if (!in) throw DataError("cannot open trade history '" + s.replay_trades + "'");
    ReplayExchange ex(read_trade_history(in, s.replay_trades));
    return run_experiment(ex, s.harness, threads);
  }
  if (!s.replay_trades.empty()) throw DataError("'replay_trades' is only used by the replay backend");
  Simulation sim(s.sim);
  SimExchange ex(sim, FaultConfig{s.api_failure_rate, s.sim.seed});
  return run_experiment(ex, s.harness, threads);
}

namespace {

class Writer {
 public:
  Writer(std::filesystem::path dir, std::ostream& log, bool lenient) : dir_(std::move(dir)), log_(log), lenient_(lenient) {}

  /// Runs `emit` into `name`; in lenient mode a failing analysis is reported and skipped.
  void file(const std::string& name, const std::function<void(std::ostream&)>& emit) {
    std::ostringstream buf;
    try {
      emit(buf);
    } catch (const std::exception& e) {
      if (!lenient_) throw;
      log_ << "warning: skipped " << name << ": " << e.what() << '\n';
      return;
    }
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << buf.str();
    written_.push_back(path);
  }

  std::vector<std::filesystem::path> written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::ostream& log_;
  bool lenient_;
  std::vector<std::filesystem::path> written_;
};

std::string dv_slug(Dv dv) {
  switch (dv) {
    case Dv::BuyProb: return "buy_prob";
    case Dv::SellProb: return "sell_prob";
    case Dv::PctBuyVol: return "pct_buy_vol";
    case Dv::PctSellVol: return "pct_sell_vol";
    case Dv::TradeProb: return "trade_prob";
  }
  return "dv";
}

const std::set<std::string> kTables = {"all",         "effects",       "regression",    "bootstrap", "randomization",
                                       "heterogeneity", "composition", "observability", "volume",    "impact"};

}  // namespace

std::vector<std::filesystem::path> analyze(std::vector<TrialRecord> trials, const std::vector<CoinAttributes>& attributes,
                                           const AnalyzeOptions& o, const std::filesystem::path& out_dir,
                                           std::ostream& log) {
  if (!kTables.count(o.table)) throw std::invalid_argument("unknown table '" + o.table + "'");
  if (o.split != AnalyzeOptions::Split::None) {
    auto halves = split_dataset(trials, o.split_seed);
    trials = o.split == AnalyzeOptions::Split::Exploratory ? std::move(halves.exploratory) : std::move(halves.confirmatory);
  }
  if (o.ftt_rate > 0.0) trials = simulate_failure_to_treat(std::move(trials), o.ftt_rate, o.ftt_seed);
  std::filesystem::create_directories(out_dir);

  const bool all = o.table == "all";
  auto want = [&](const char* t) { return all || o.table == t; };
  const PValueMethod method = o.exact_t ? PValueMethod::StudentWelch : PValueMethod::Normal;
  const DvSet set = extract_dvs(trials);
  Writer w(out_dir, log, all);

  if (want("effects")) {
    w.file("effects.csv", [&](std::ostream& out) {
      write_effect_table_csv(out, build_effect_table(set, o.bonferroni_m, method));
    });
  }
  if (want("regression")) {
    std::optional<TreatmentTable> t;
    w.file("regression.csv", [&](std::ostream& out) {
      t = treatment_table(set, o.bonferroni_m, method);
      write_treatment_table_csv(out, *t);
    });
    if (t) {
      const Dv dvs[] = {Dv::BuyProb, Dv::PctBuyVol, Dv::TradeProb};
      for (std::size_t i = 0; i < 3; ++i) {
        w.file("regression_" + dv_slug(dvs[i]) + ".csv", [&](std::ostream& out) { write_regression_csv(out, t->fits[i]); });
      }
    }
  }
  if (want("bootstrap") && o.bootstrap_b > 0) {
    w.file("bootstrap.csv", [&](std::ostream& out) {
      BootstrapOptions b;
      b.replicates = o.bootstrap_b;
      b.seed = o.seed;
      b.coin_blocks = o.coin_blocks;
      b.threads = o.threads;
      write_bootstrap_csv(out, bootstrap_effects(trials, b));
    });
  }
  if (want("randomization")) {
    const RandomizationReport r = randomization_report(trials);
    w.file("randomization.csv", [&](std::ostream& out) { write_randomization_csv(out, r); });
    w.file("balance.csv", [&](std::ostream& out) { write_balance_csv(out, r); });
    w.file("per_coin.csv", [&](std::ostream& out) { write_per_coin_csv(out, r); });
  }
  if (want("heterogeneity")) {
    w.file("heterogeneity.csv", [&](std::ostream& out) {
      if (attributes.empty()) throw DataError("no coin attributes available");
      const auto h = heterogeneity_analysis(set, attributes, Dv::BuyProb, Condition::Buy, 1);
      for (const auto& c : h.excluded) log << "warning: heterogeneity excludes coin " << c << " (too few observations)\n";
      write_regression_csv(out, h.regression);
    });
  }
  if (want("composition")) {
    RegressionOptions ro;
    ro.pvalue = method;
    w.file("composition.csv", [&](std::ostream& out) {
      write_regression_csv(out, composition_regression(set, Dv::BuyProb, 1, ClockSpec{}, ro));
    });
  }
  if (want("observability")) {
    RegressionOptions ro;
    ro.pvalue = method;
    w.file("observability.csv", [&](std::ostream& out) { write_regression_csv(out, observability_regression(set, 1, ro)); });
  }
  if (want("volume")) {
    w.file("volume.csv", [&](std::ostream& out) { write_volume_accounting_csv(out, volume_accounting(set)); });
  }
  if (want("impact")) {
    w.file("impact.csv", [&](std::ostream& out) {
      const ImpactRates p = impact_rates(trials);
      out << "quantity,value\n";
      out << "buy_raises_price," << format_double(p.buy_raises) << '\n';
      out << "sell_lowers_price," << format_double(p.sell_lowers) << '\n';
      out << "control_trade_prob_15min," << format_double(p.any_trade_15) << '\n';
      out << "buys," << p.buys << '\n';
      out << "sells," << p.sells << '\n';
      out << "controls," << p.controls << '\n';
    });
  }
  return w.written();
}

}  // namespace cdalab::cli
