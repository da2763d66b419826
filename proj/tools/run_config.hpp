// Copyright 2026 The seal Authors
// SPDX-License-Identifier: Apache-2.0

// Flat key = value run configuration. Later assignments win, so a config file
// can be overridden by --set key=value and by command flags.

#pragma once

#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seal/error.hpp"

namespace seal::cli {

using json = nlohmann::json;

inline std::string normalize_key(std::string key) {
  for (auto& c : key)
    if (c == '-') c = '_';
  return key;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class RunConfig {
 public:
  void set(const std::string& key, const std::string& value) {
    const auto k = normalize_key(trim(key));
    if (k.empty()) throw ConfigError("empty config key");
    values_[k] = trim(value);
  }

  /// "key=value" as given to --set.
  void set_assignment(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(text) + "'");
    set(std::string(text.substr(0, eq)), std::string(text.substr(eq + 1)));
  }

  /// One assignment per line; '#' starts a comment.
  void merge_text(std::string_view text, const std::string& origin) {
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      auto line = text.substr(pos, end - pos);
      ++line_no;
      pos = end + 1;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      if (trim(line).empty()) continue;
      if (line.find('=') == std::string_view::npos) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
      }
      set_assignment(line);
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string str(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config key '" + key + "'");
    return record(key, it->second);
  }

  std::string str(const std::string& key, const std::string& fallback) {
    return has(key) ? str(key) : record(key, fallback);
  }

  std::optional<std::string> optional_str(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return str(key);
  }

  double real(const std::string& key) { return record_json(key, parse_real(key, str(key))); }
  double real(const std::string& key, double fallback) {
    return has(key) ? real(key) : record_json(key, fallback);
  }
  std::optional<double> optional_real(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return real(key);
  }

  std::size_t count(const std::string& key) { return record_json(key, parse_count(key, str(key))); }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : record_json(key, fallback);
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return record_json(key, fallback);
    const auto v = str(key);
    if (v == "true" || v == "1" || v == "yes") return record_json(key, true);
    if (v == "false" || v == "0" || v == "no") return record_json(key, false);
    throw ConfigError("config key '" + key + "' must be true or false, got '" + v + "'");
  }

  /// Seeds are never defaulted.
  std::uint64_t seed(const std::string& key = "seed") {
    if (!has(key)) throw ConfigError("missing required seed '" + key + "' (seeds are never implicit)");
    return count(key);
  }

  std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) {
      resolved_[key] = fallback;
      return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split(str(key))) out.push_back(parse_real(key, item));
    return record_json(key, out);
  }

  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& fallback) {
    if (!has(key)) {
      resolved_[key] = fallback;
      return fallback;
    }
    std::vector<std::size_t> out;
    for (const auto& item : split(str(key))) out.push_back(parse_count(key, item));
    return record_json(key, out);
  }

  /// Rejects keys that no part of the command read.
  void reject_unused() const {
    std::string unknown;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
    }
    if (!unknown.empty()) throw ConfigError("unknown config key(s) for this command: " + unknown);
  }

  /// Every value the command read, with defaults filled in.
  const json& resolved() const { return resolved_; }

 private:
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      auto end = s.find(',', pos);
      if (end == std::string::npos) end = s.size();
      if (auto item = trim(std::string_view(s).substr(pos, end - pos)); !item.empty()) out.push_back(item);
      pos = end + 1;
    }
    return out;
  }

  static double parse_real(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw ConfigError("config key '" + key + "' must be a number, got '" + v + "'");
    }
    return out;
  }

  static std::size_t parse_count(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw ConfigError("config key '" + key + "' must be a non-negative integer, got '" + v + "'");
    }
    return static_cast<std::size_t>(out);
  }

  std::string record(const std::string& key, const std::string& v) {
    used_.insert(key);
    resolved_[key] = v;
    return v;
  }

  template <typename T>
  T record_json(const std::string& key, T v) {
    resolved_[key] = v;
    return v;
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
  json resolved_ = json::object();
};

}  // namespace seal::cli
