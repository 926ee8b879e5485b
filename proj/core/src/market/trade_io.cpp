#include "cdalab/market/trade_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "cdalab/error.hpp"
#include "cdalab/text.hpp"

namespace cdalab {

std::string format_trade_line(const Trade& trade, std::string_view coin_name) {
  std::string line;
  line.reserve(48);
  line += std::to_string(trade.timestamp);
  line += ',';
  line += coin_name;
  line += ',';
  line += std::to_string(trade.price.units);
  line += ',';
  line += std::to_string(trade.quantity);
  line += ',';
  line += side_code(trade.taker_side);
  return line;
}

void write_trade_history(std::ostream& out, std::span<const Trade> trades,
                         std::span<const std::string> coin_names) {
  for (const Trade& t : trades) out << format_trade_line(t, coin_names[t.coin]) << '\n';
}

RecordedTrades read_trade_history(std::istream& in, const std::string& source) {
  RecordedTrades rec;
  std::unordered_map<std::string, CoinId> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != 5) {
      throw ParseError(source, line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    Trade t;
    try {
      t.timestamp = parse_int(fields[0]);
      t.price = Price{parse_int(fields[2])};
      t.quantity = parse_int(fields[3]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, line_no, e.what());
    }
    if (fields[4] == "B") {
      t.taker_side = Side::Buy;
    } else if (fields[4] == "S") {
      t.taker_side = Side::Sell;
    } else {
      throw ParseError(source, line_no, "taker_side must be B or S");
    }
    if (t.price.units <= 0 || t.quantity <= 0) throw ParseError(source, line_no, "price and quantity must be positive");
    const std::string coin(fields[1]);
    auto [it, inserted] = ids.emplace(coin, static_cast<CoinId>(rec.coin_names.size()));
    if (inserted) {
      rec.coin_names.push_back(coin);
      rec.tapes.emplace_back();
    }
    t.coin = it->second;
    try {
      rec.tapes[t.coin].append(t);
    } catch (const std::logic_error&) {
      throw ParseError(source, line_no, "timestamps must be non-decreasing per coin");
    }
  }
  return rec;
}

}  // namespace cdalab
