// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "run_config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace gradstft::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

CliError config_error(int line, const std::string& message) {
  return CliError("config", "line " + std::to_string(line) + ": " + message, kExitConfig);
}

}  // namespace

RunConfig RunConfig::parse(std::string_view text) {
  RunConfig cfg;
  std::string section;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    const auto comment = line.find_first_of("#;");
    if (comment != std::string_view::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw config_error(line_no, "unterminated section header");
      const auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) throw config_error(line_no, "bad section name");
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw config_error(line_no, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!valid_name(key)) throw config_error(line_no, "bad key name");
    if (section.empty()) throw config_error(line_no, "key '" + std::string(key) + "' outside a section");
    if (value.empty()) throw config_error(line_no, "empty value for '" + section + "." + std::string(key) + "'");
    const std::string full = section + "." + std::string(key);
    if (cfg.entries_.count(full) != 0) throw config_error(line_no, "duplicate key '" + full + "'");
    cfg.entries_.emplace(full, Entry{std::string(value), line_no});
  }
  return cfg;
}

const RunConfig::Entry* RunConfig::find(const std::string& section, const std::string& key) const {
  const std::string full = section + "." + key;
  const auto it = entries_.find(full);
  if (it == entries_.end()) return nullptr;
  used_.insert(full);
  return &it->second;
}

void RunConfig::bad_value(const std::string& section, const std::string& key,
                          const char* expected) const {
  const Entry& e = entries_.at(section + "." + key);
  throw config_error(e.line, "'" + section + "." + key + "' must be " + expected + ", got '" +
                                 e.value + "'");
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  return entries_.count(section + "." + key) != 0;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e == nullptr ? fallback : e->value;
}

double RunConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  double v = 0.0;
  const auto* end = e->value.data() + e->value.size();
  const auto r = std::from_chars(e->value.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) bad_value(section, key, "a finite number");
  return v;
}

int RunConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  int v = 0;
  const auto* end = e->value.data() + e->value.size();
  const auto r = std::from_chars(e->value.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) bad_value(section, key, "an integer");
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& section, const std::string& key,
                                 std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  std::uint64_t v = 0;
  const auto* end = e->value.data() + e->value.size();
  const auto r = std::from_chars(e->value.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) bad_value(section, key, "an unsigned 64-bit integer");
  return v;
}

bool RunConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  if (e->value == "true") return true;
  if (e->value == "false") return false;
  bad_value(section, key, "true or false");
}

std::vector<double> RunConfig::get_doubles(const std::string& section, const std::string& key,
                                           const std::vector<double>& fallback) const {
  const Entry* e = find(section, key);
  if (e == nullptr) return fallback;
  std::vector<double> out;
  std::string_view rest = e->value;
  while (true) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    double v = 0.0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || r.ec != std::errc() || r.ptr != item.data() + item.size() || !std::isfinite(v)) {
      bad_value(section, key, "a comma-separated list of numbers");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

void RunConfig::reject_unused() const {
  for (const auto& [name, entry] : entries_) {
    if (used_.count(name) == 0) throw config_error(entry.line, "unknown key '" + name + "'");
  }
}

}  // namespace gradstft::cli
