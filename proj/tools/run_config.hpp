// Copyright 2026 The gradstft Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gradstft::cli {

// An error the command line reports as one line "error[<kind>]: <message>".
class CliError : public std::runtime_error {
 public:
  CliError(std::string kind, const std::string& message, int exit_code)
      : std::runtime_error(message), kind_(std::move(kind)), exit_code_(exit_code) {}
  const std::string& kind() const { return kind_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string kind_;
  int exit_code_;
};

inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitInput = 4;
inline constexpr int kExitRun = 5;

// INI-style "key = value" lines under "[section]" headers. '#' and ';' start
// comments. Every key must be read by the command, otherwise
// reject_unused() names the stray one.
class RunConfig {
 public:
  static RunConfig parse(std::string_view text);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  // Comma-separated numbers.
  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;

  void reject_unused() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& section, const std::string& key,
                              const char* expected) const;

  std::map<std::string, Entry> entries_;  // "section.key"
  mutable std::set<std::string> used_;
};

}  // namespace gradstft::cli
