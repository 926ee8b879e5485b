#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdalab {

/// Malformed input data: a log line, a config file, a CSV.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), source_(std::move(source)), line_(line) {}

  [[nodiscard]] const std::string& source() const { return source_; }
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace cdalab
