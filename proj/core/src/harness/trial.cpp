#include "cdalab/harness/trial.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "cdalab/error.hpp"
#include "cdalab/sim/rng.hpp"
#include "cdalab/text.hpp"

namespace cdalab {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Buy: return "buy";
    case Condition::Sell: return "sell";
    case Condition::Control: return "control";
  }
  return "unknown";
}

Condition parse_condition(std::string_view s) {
  if (s == "buy") return Condition::Buy;
  if (s == "sell") return Condition::Sell;
  if (s == "control") return Condition::Control;
  throw std::invalid_argument("unknown condition '" + std::string(s) + "'");
}

bool analysed(const TrialRecord& t) {
  return t.condition == Condition::Control ? !t.pseudo_failure : t.intervened;
}

void validate(const TrialRecord& t) {
  if (t.coin.empty()) throw std::invalid_argument("coin must not be empty");
  if (t.condition == Condition::Control) {
    if (t.intervened) throw std::invalid_argument("control trials cannot be intervened");
    if (t.trade_size != 0) throw std::invalid_argument("control trials have trade_size 0");
  } else if (t.trade_size <= 0) {
    throw std::invalid_argument("treatment trials need a positive trade_size");
  }
  const auto& p = t.pre_state;
  if (!(p.pct_buy_volume_prev_hour >= 0.0 && p.pct_buy_volume_prev_hour <= 1.0)) {
    throw std::invalid_argument("pct_buy_volume_prev_hour must lie in [0, 1]");
  }
  if (p.prev_hour_volume < 0) throw std::invalid_argument("prev_hour_volume must be non-negative");
  for (const auto& m : t.monitors) {
    if (m.missing) continue;
    if (m.any_trade != m.last_trade_side.has_value()) {
      throw std::invalid_argument("last_trade_side must be set exactly when a trade occurred");
    }
    if (m.buy_volume < 0 || m.sell_volume < 0) throw std::invalid_argument("volumes must be non-negative");
    if (m.any_trade != (m.trade_count > 0)) throw std::invalid_argument("trade_count disagrees with any_trade");
  }
}

const std::string_view kTrialLogHeader =
    "trial_id,coin,condition,intervened,trade_size,intervention_time,"
    "bid_above_last,bid_below_last,bid_at_last,ask_above_last,ask_below_last,ask_at_last,"
    "last_trade_buy,pct_buy_volume_prev_hour,log_relative_volume,prev_hour_volume,"
    "m1_any_trade,m1_last_side,m1_buy_volume,m1_sell_volume,m1_trade_count,"
    "m2_any_trade,m2_last_side,m2_buy_volume,m2_sell_volume,m2_trade_count,"
    "m3_any_trade,m3_last_side,m3_buy_volume,m3_sell_volume,m3_trade_count";

namespace {

constexpr std::size_t kFieldCount = 6 + 10 + 15;

void append_triple(std::string& line, QuoteVsLast q) {
  line += q == QuoteVsLast::Above ? "1,0,0" : q == QuoteVsLast::Below ? "0,1,0" : "0,0,1";
}

}  // namespace

std::string format_trial_line(const TrialRecord& t) {
  std::string line;
  line.reserve(160);
  auto field = [&line](const auto& v) {
    line += v;
    line += ',';
  };
  field(std::to_string(t.trial_id));
  field(t.coin);
  field(std::string(to_string(t.condition)));
  field(t.intervened ? "1" : "0");
  field(std::to_string(t.trade_size));
  field(std::to_string(t.intervention_time));
  append_triple(line, t.pre_state.best_buy);
  line += ',';
  append_triple(line, t.pre_state.best_sell);
  line += ',';
  field(t.pre_state.last_trade_was_buy ? "1" : "0");
  field(format_double(t.pre_state.pct_buy_volume_prev_hour));
  field(t.pre_state.log_relative_volume ? format_double(*t.pre_state.log_relative_volume) : std::string());
  line += std::to_string(t.pre_state.prev_hour_volume);
  for (const auto& m : t.monitors) {
    if (m.missing) {
      line += ",,,,,";
      continue;
    }
    line += ',';
    field(m.any_trade ? "1" : "0");
    field(m.last_trade_side ? std::string(1, side_code(*m.last_trade_side)) : std::string());
    field(std::to_string(m.buy_volume));
    field(std::to_string(m.sell_volume));
    line += std::to_string(m.trade_count);
  }
  return line;
}

void write_trial_log(std::ostream& out, const std::vector<TrialRecord>& trials) {
  out << kTrialLogHeader << '\n';
  for (const auto& t : trials) out << format_trial_line(t) << '\n';
}

namespace {

class LineParser {
 public:
  LineParser(const std::vector<std::string_view>& fields, const std::string& source, std::size_t line)
      : fields_(fields), source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_, line_, "field " + std::to_string(pos_) + ": " + what);
  }

  std::string_view next() { return fields_[pos_++]; }

  std::int64_t integer() {
    const auto f = next();
    try {
      return parse_int(f);
    } catch (const std::invalid_argument& e) {
      --pos_;
      fail(e.what());
    }
  }

  bool flag() {
    const auto f = next();
    if (f == "0") return false;
    if (f == "1") return true;
    --pos_;
    fail("expected 0 or 1, got '" + std::string(f) + "'");
  }

  QuoteVsLast triple() {
    const bool above = flag(), below = flag(), at = flag();
    if (above + below + at != 1) {
      pos_ -= 3;
      fail("exactly one indicator of a triple must be set");
    }
    return above ? QuoteVsLast::Above : below ? QuoteVsLast::Below : QuoteVsLast::At;
  }

  double real() {
    const auto f = next();
    try {
      return parse_double(f);
    } catch (const std::invalid_argument& e) {
      --pos_;
      fail(e.what());
    }
  }

  MonitorRecord monitor() {
    MonitorRecord m;
    bool all_empty = true;
    for (std::size_t i = 0; i < 5; ++i) all_empty = all_empty && fields_[pos_ + i].empty();
    if (all_empty) {
      pos_ += 5;
      m.missing = true;
      return m;
    }
    m.any_trade = flag();
    const auto side = next();
    if (side == "B") {
      m.last_trade_side = Side::Buy;
    } else if (side == "S") {
      m.last_trade_side = Side::Sell;
    } else if (!side.empty()) {
      --pos_;
      fail("last side must be B, S or empty");
    }
    m.buy_volume = integer();
    m.sell_volume = integer();
    const auto count = integer();
    if (count < 0) {
      --pos_;
      fail("trade_count must be non-negative");
    }
    m.trade_count = static_cast<std::uint32_t>(count);
    return m;
  }

 private:
  const std::vector<std::string_view>& fields_;
  const std::string& source_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<TrialRecord> read_trial_log(std::istream& in, const std::string& source) {
  std::vector<TrialRecord> trials;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTrialLogHeader) throw ParseError(source, line_no, "missing or unexpected trial log header");
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(line, ',');
    if (fields.size() != kFieldCount) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(kFieldCount) + " fields, got " + std::to_string(fields.size()));
    }
    LineParser p(fields, source, line_no);
    TrialRecord t;
    const auto id = p.integer();
    if (id < 0) p.fail("trial_id must be non-negative");
    t.trial_id = static_cast<std::uint64_t>(id);
    t.coin = std::string(p.next());
    try {
      t.condition = parse_condition(p.next());
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
    t.intervened = p.flag();
    t.trade_size = p.integer();
    t.intervention_time = p.integer();
    t.pre_state.best_buy = p.triple();
    t.pre_state.best_sell = p.triple();
    t.pre_state.last_trade_was_buy = p.flag();
    t.pre_state.pct_buy_volume_prev_hour = p.real();
    if (fields[14].empty()) {
      p.next();
    } else {
      t.pre_state.log_relative_volume = p.real();
    }
    t.pre_state.prev_hour_volume = p.integer();
    for (auto& m : t.monitors) m = p.monitor();
    try {
      validate(t);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
    trials.push_back(std::move(t));
  }
  if (!header_seen) throw ParseError(source, line_no + 1, "missing trial log header");
  return trials;
}

std::vector<TrialRecord> load_trial_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial log '" + path + "'");
  return read_trial_log(in, path);
}

std::vector<Half> split_assignment(const std::vector<TrialRecord>& trials, std::uint64_t seed) {
  std::vector<Half> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    Rng rng(derive_seed(seed, Stream::Split, {t.trial_id}));
    out.push_back(rng.bernoulli(0.5) ? Half::Confirmatory : Half::Exploratory);
  }
  return out;
}

SplitDataset split_dataset(const std::vector<TrialRecord>& trials, std::uint64_t seed) {
  SplitDataset s;
  const auto halves = split_assignment(trials, seed);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    (halves[i] == Half::Exploratory ? s.exploratory : s.confirmatory).push_back(trials[i]);
  }
  return s;
}

std::vector<TrialRecord> simulate_failure_to_treat(std::vector<TrialRecord> trials, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("failure-to-treat rate must lie in [0, 1]");
  for (auto& t : trials) {
    if (t.condition != Condition::Control) continue;
    Rng rng(derive_seed(seed, Stream::FailureToTreat, {t.trial_id}));
    if (rng.bernoulli(rate)) t.pseudo_failure = true;
  }
  return trials;
}

}  // namespace cdalab
