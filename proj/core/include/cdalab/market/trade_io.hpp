#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdalab/market/trade_tape.hpp"

namespace cdalab {

/// Trades of several coins as read from a trade-history file. Coins are
/// numbered in order of first appearance.
struct RecordedTrades {
  std::vector<std::string> coin_names;
  std::vector<TradeTape> tapes;  // one per coin, indexed by CoinId
};

/// One `timestamp,coin,price,quantity,taker_side` line, no newline.
std::string format_trade_line(const Trade& trade, std::string_view coin_name);

void write_trade_history(std::ostream& out, std::span<const Trade> trades,
                         std::span<const std::string> coin_names);

/// Parses the trade-history line format. Blank lines and lines starting
/// with '#' are skipped. Throws ParseError naming the line.
RecordedTrades read_trade_history(std::istream& in, const std::string& source = "<trades>");

}  // namespace cdalab
