#include "cdalab/sim/sim_config.hpp"
#include <algorithm>

#include <sstream>
#include <stdexcept>

#include "cdalab/error.hpp"
#include "cdalab/text.hpp"

namespace cdalab {

void validate(const SimConfig& cfg) {
  if (cfg.coins < 1) throw std::invalid_argument("coins must be >= 1");
  if (cfg.duration <= 0) throw std::invalid_argument("duration must be positive");
  if (cfg.min_order_size < 1) throw std::invalid_argument("min_order_size must be >= 1");
  if (cfg.fee_rate < 0.0 || cfg.fee_rate >= 1.0) throw std::invalid_argument("fee_rate must lie in [0, 1)");
  if (cfg.activity_sigma < 0.0 || cfg.price_sigma < 0.0) throw std::invalid_argument("sigmas must be non-negative");
  if (!(cfg.price_median >= 2.0)) throw std::invalid_argument("price_median must be >= 2");
  if (cfg.sweep_interval <= 0) throw std::invalid_argument("sweep interval must be positive");
  if (cfg.initial_order_ttl <= 0) throw std::invalid_argument("initial order ttl must be positive");
  for (const auto& spec : cfg.agents) validate(spec.config);
}

namespace {

Millis minutes_to_ms(double m) { return static_cast<Millis>(m * static_cast<double>(kMinute)); }

void read_agent(ConfigFile& f, const std::string& label, AgentSpec& spec) {
  const std::string p = "agent." + label + ".";
  AgentConfig& a = spec.config;
  if (auto v = f.take_string(p + "kind")) {
    try {
      a.kind = parse_agent_kind(*v);
    } catch (const std::invalid_argument& e) {
      throw ParseError(f.source(), f.line_of(p + "kind"), "invalid value for key '" + p + "kind': " + e.what());
    }
  }
  if (auto v = f.take_int(p + "count")) {
    if (*v < 0) throw ParseError(f.source(), f.line_of(p + "count"), "invalid value for key '" + p + "count'");
    spec.count = static_cast<std::uint32_t>(*v);
  }
  if (auto v = f.take_double(p + "theta")) a.theta = *v;
  if (auto v = f.take_double(p + "rate")) a.arrival_rate = *v;
  if (auto v = f.take_double(p + "lookback_minutes")) a.lookback = minutes_to_ms(*v);
  if (auto v = f.take_int(p + "holdings_value")) a.initial_holdings_value = *v;
  if (auto v = f.take_bool(p + "allow_short")) a.allow_short = *v;
  if (auto v = f.take_bool(p + "buy_only")) a.buy_only = *v;
  if (auto v = f.take_double(p + "smoothing")) a.smoothing = *v;
  if (auto v = f.take_double(p + "activity")) a.zi.activity = *v;
  if (auto v = f.take_double(p + "buy_propensity")) a.zi.buy_propensity = *v;
  if (auto v = f.take_double(p + "taker_prob")) a.zi.taker_prob = *v;
  if (auto v = f.take_double(p + "size_median")) a.zi.size_median = *v;
  if (auto v = f.take_double(p + "size_sigma")) a.zi.size_sigma = *v;
  if (auto v = f.take_int(p + "max_slippage_ticks")) a.zi.max_slippage_ticks = *v;
  if (auto v = f.take_double(p + "improve_prob")) a.zi.improve_prob = *v;
  if (auto v = f.take_double(p + "depth_decay")) a.zi.depth_decay = *v;
  if (auto v = f.take_double(p + "ttl_minutes")) a.zi.order_ttl = minutes_to_ms(*v);
  try {
    validate(a);
  } catch (const std::invalid_argument& e) {
    throw ParseError(f.source(), f.line_of(p + "kind"), "agent '" + label + "': " + e.what());
  }
}

}  // namespace

SimConfig read_sim_config(ConfigFile& f) {
  SimConfig cfg;
  if (auto v = f.take_int("coins")) {
    if (*v < 1) throw ParseError(f.source(), f.line_of("coins"), "invalid value for key 'coins': must be >= 1");
    cfg.coins = static_cast<std::uint32_t>(*v);
  }
  if (auto v = f.take_int("start_time_ms")) cfg.start_time = *v;
  if (auto v = f.take_double("duration_hours")) {
    if (!(*v > 0)) throw ParseError(f.source(), f.line_of("duration_hours"), "invalid value for key 'duration_hours'");
    cfg.duration = static_cast<Millis>(*v * static_cast<double>(kHour));
  }
  if (auto v = f.take_int("seed")) cfg.seed = static_cast<std::uint64_t>(*v);
  if (auto v = f.take_int("min_order_size")) cfg.min_order_size = *v;
  if (auto v = f.take_double("fee_rate")) cfg.fee_rate = *v;
  if (auto v = f.take_double("activity_sigma")) cfg.activity_sigma = *v;
  if (auto v = f.take_double("price_median")) cfg.price_median = *v;
  if (auto v = f.take_double("price_sigma")) cfg.price_sigma = *v;
  if (auto v = f.take_int("initial_levels")) cfg.initial_levels = static_cast<std::uint32_t>(*v);
  if (auto v = f.take_int("initial_level_value")) cfg.initial_level_value = *v;
  if (auto v = f.take_double("initial_ttl_minutes")) cfg.initial_order_ttl = minutes_to_ms(*v);
  if (auto v = f.take_double("sweep_minutes")) cfg.sweep_interval = minutes_to_ms(*v);
  if (auto v = f.take_bool("record_orders")) cfg.record_orders = *v;

  std::vector<std::string> labels;
  for (const std::string& key : f.keys_with_prefix("agent.")) {
    const auto dot = key.find('.', 6);
    if (dot == std::string::npos) throw ParseError(f.source(), f.line_of(key), "malformed agent key '" + key + "'");
    std::string label = key.substr(6, dot - 6);
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) labels.push_back(label);
  }
  for (const std::string& label : labels) {
    AgentSpec spec;
    spec.label = label;
    read_agent(f, label, spec);
    cfg.agents.push_back(spec);
  }
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ParseError(f.source(), 0, e.what());
  }
  return cfg;
}

std::string write_sim_config(const SimConfig& cfg) {
  std::ostringstream out;
  auto minutes = [](Millis ms) { return format_double(static_cast<double>(ms) / static_cast<double>(kMinute)); };
  out << "coins = " << cfg.coins << '\n'
      << "start_time_ms = " << cfg.start_time << '\n'
      << "duration_hours = " << format_double(static_cast<double>(cfg.duration) / static_cast<double>(kHour)) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "min_order_size = " << cfg.min_order_size << '\n'
      << "fee_rate = " << format_double(cfg.fee_rate) << '\n'
      << "activity_sigma = " << format_double(cfg.activity_sigma) << '\n'
      << "price_median = " << format_double(cfg.price_median) << '\n'
      << "price_sigma = " << format_double(cfg.price_sigma) << '\n'
      << "initial_levels = " << cfg.initial_levels << '\n'
      << "initial_level_value = " << cfg.initial_level_value << '\n'
      << "initial_ttl_minutes = " << minutes(cfg.initial_order_ttl) << '\n'
      << "sweep_minutes = " << minutes(cfg.sweep_interval) << '\n'
      << "record_orders = " << (cfg.record_orders ? 1 : 0) << '\n';
  for (const auto& spec : cfg.agents) {
    const std::string p = "agent." + spec.label + ".";
    const AgentConfig& a = spec.config;
    out << p << "kind = " << to_string(a.kind) << '\n'
        << p << "count = " << spec.count << '\n'
        << p << "theta = " << format_double(a.theta) << '\n'
        << p << "rate = " << format_double(a.arrival_rate) << '\n'
        << p << "lookback_minutes = " << minutes(a.lookback) << '\n'
        << p << "holdings_value = " << a.initial_holdings_value << '\n'
        << p << "allow_short = " << (a.allow_short ? 1 : 0) << '\n'
        << p << "buy_only = " << (a.buy_only ? 1 : 0) << '\n'
        << p << "smoothing = " << format_double(a.smoothing) << '\n'
        << p << "activity = " << format_double(a.zi.activity) << '\n'
        << p << "buy_propensity = " << format_double(a.zi.buy_propensity) << '\n'
        << p << "taker_prob = " << format_double(a.zi.taker_prob) << '\n'
        << p << "size_median = " << format_double(a.zi.size_median) << '\n'
        << p << "size_sigma = " << format_double(a.zi.size_sigma) << '\n'
        << p << "max_slippage_ticks = " << a.zi.max_slippage_ticks << '\n'
        << p << "improve_prob = " << format_double(a.zi.improve_prob) << '\n'
        << p << "depth_decay = " << format_double(a.zi.depth_decay) << '\n'
        << p << "ttl_minutes = " << minutes(a.zi.order_ttl) << '\n';
  }
  return out.str();
}

}  // namespace cdalab
