#include "cdalab/config_file.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <stdexcept>

#include "cdalab/error.hpp"
#include "cdalab/text.hpp"

namespace cdalab {

ConfigFile ConfigFile::parse(std::istream& in, std::string source) {
  ConfigFile cfg;
  cfg.source_ = std::move(source);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(cfg.source_, line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(cfg.source_, line_no, "empty key");
    if (cfg.find(key)) throw ParseError(cfg.source_, line_no, "duplicate key '" + key + "'");
    cfg.entries_.push_back(Entry{key, value, line_no, false});
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  return parse(in, path);
}

void ConfigFile::set(std::string key, std::string value) {
  if (Entry* e = find(key)) {
    e->value = std::move(value);
    e->used = false;
    return;
  }
  entries_.push_back(Entry{std::move(key), std::move(value), 0, false});
}

ConfigFile::Entry* ConfigFile::find(std::string_view key) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
  return it == entries_.end() ? nullptr : &*it;
}

const ConfigFile::Entry* ConfigFile::find(std::string_view key) const {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
  return it == entries_.end() ? nullptr : &*it;
}

bool ConfigFile::has(std::string_view key) const { return find(key) != nullptr; }

std::size_t ConfigFile::line_of(std::string_view key) const {
  const Entry* e = find(key);
  return e ? e->line : 0;
}

void ConfigFile::bad_value(const Entry& e, const std::string& why) const {
  throw ParseError(source_, e.line, "invalid value for key '" + e.key + "': " + why);
}

std::optional<std::string> ConfigFile::take_string(std::string_view key) {
  Entry* e = find(key);
  if (!e) return std::nullopt;
  e->used = true;
  return e->value;
}

std::optional<std::int64_t> ConfigFile::take_int(std::string_view key) {
  Entry* e = find(key);
  if (!e) return std::nullopt;
  e->used = true;
  try {
    return parse_int(e->value);
  } catch (const std::invalid_argument& ex) {
    bad_value(*e, ex.what());
  }
}

std::optional<double> ConfigFile::take_double(std::string_view key) {
  Entry* e = find(key);
  if (!e) return std::nullopt;
  e->used = true;
  try {
    return parse_double(e->value);
  } catch (const std::invalid_argument& ex) {
    bad_value(*e, ex.what());
  }
}

std::optional<bool> ConfigFile::take_bool(std::string_view key) {
  Entry* e = find(key);
  if (!e) return std::nullopt;
  e->used = true;
  try {
    return parse_bool(e->value);
  } catch (const std::invalid_argument& ex) {
    bad_value(*e, ex.what());
  }
}

std::vector<std::string> ConfigFile::keys_with_prefix(std::string_view prefix) const {
  std::vector<std::string> out;
  for (const Entry& e : entries_) {
    if (!e.used && e.key.compare(0, prefix.size(), prefix) == 0) out.push_back(e.key);
  }
  return out;
}

void ConfigFile::ensure_all_consumed() const {
  for (const Entry& e : entries_) {
    if (!e.used) throw ParseError(source_, e.line, "unknown config key '" + e.key + "'");
  }
}

std::string ConfigFile::canonical_text() const {
  std::vector<const Entry*> sorted;
  for (const Entry& e : entries_) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const Entry* a, const Entry* b) { return a->key < b->key; });
  std::string out;
  for (const Entry* e : sorted) out += e->key + "=" + e->value + "\n";
  return out;
}

}  // namespace cdalab
