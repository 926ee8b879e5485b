#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdalab {

/// Flat `key = value` text file. '#' starts a comment. Every key must be
/// consumed by some reader; leftovers are reported with their line number.
class ConfigFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
    bool used = false;
  };

  static ConfigFile parse(std::istream& in, std::string source = "<config>");
  static ConfigFile load(const std::string& path);

  /// Sets or replaces a key (used for command-line overrides).
  void set(std::string key, std::string value);

  [[nodiscard]] bool has(std::string_view key) const;
  /// Line number of `key`, 0 when absent or set programmatically.
  [[nodiscard]] std::size_t line_of(std::string_view key) const;
  std::optional<std::string> take_string(std::string_view key);
  std::optional<std::int64_t> take_int(std::string_view key);
  std::optional<double> take_double(std::string_view key);
  std::optional<bool> take_bool(std::string_view key);

  /// Unconsumed keys starting with `prefix`, in file order.
  [[nodiscard]] std::vector<std::string> keys_with_prefix(std::string_view prefix) const;

  /// Throws ParseError for the first key nobody consumed.
  void ensure_all_consumed() const;

  /// Canonical text (sorted keys) for digests.
  [[nodiscard]] std::string canonical_text() const;
  [[nodiscard]] const std::string& source() const { return source_; }

 private:
  std::vector<Entry> entries_;
  std::string source_;

  Entry* find(std::string_view key);
  const Entry* find(std::string_view key) const;
  [[noreturn]] void bad_value(const Entry& e, const std::string& why) const;
};

}  // namespace cdalab
