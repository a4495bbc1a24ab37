// SPDX-License-Identifier: Apache-2.0
//
// Flat key-value experiment configuration files. One `key = value` pair per
// line, '#' starts a comment, dotted keys group related settings. Lists are
// comma-separated; integer spans use "a..b" and float grids "a:step:b".

#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace csifb {

namespace detail {

inline std::string trim(std::string_view sv) {
  const auto begin = sv.find_first_not_of(" \t\r");
  const auto end = sv.find_last_not_of(" \t\r");
  if (begin == std::string_view::npos) {
    return {};
  }
  return std::string(sv.substr(begin, end - begin + 1));
}

inline std::optional<double> parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) {
      return std::nullopt;
    }
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    return std::nullopt;
  }
  return v;
}

/// "1,2,3" or "1..10".
inline std::optional<std::vector<int>> parse_int_list(const std::string& s) {
  std::vector<int> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const auto lo = parse_int(trim(s.substr(0, dots)));
    const auto hi = parse_int(trim(s.substr(dots + 2)));
    if (!lo || !hi || *hi < *lo) {
      return std::nullopt;
    }
    for (long long v = *lo; v <= *hi; ++v) {
      out.push_back(static_cast<int>(v));
    }
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_int(trim(item));
    if (!v) {
      return std::nullopt;
    }
    out.push_back(static_cast<int>(*v));
  }
  if (out.empty()) {
    return std::nullopt;
  }
  return out;
}

/// "0,0.5,1" or "0:0.1:1".
inline std::optional<std::vector<double>> parse_double_list(const std::string& s) {
  std::vector<double> out;
  const auto first_colon = s.find(':');
  if (first_colon != std::string::npos) {
    const auto second_colon = s.find(':', first_colon + 1);
    if (second_colon == std::string::npos) {
      return std::nullopt;
    }
    const auto lo = parse_double(trim(s.substr(0, first_colon)));
    const auto step = parse_double(trim(s.substr(first_colon + 1, second_colon - first_colon - 1)));
    const auto hi = parse_double(trim(s.substr(second_colon + 1)));
    if (!lo || !step || !hi || !(*step > 0.0) || *hi < *lo) {
      return std::nullopt;
    }
    // Walk on integer multiples of the step so grid points are exact-ish.
    const long long count = static_cast<long long>(std::floor((*hi - *lo) / *step + 0.5)) + 1;
    for (long long k = 0; k < count; ++k) {
      out.push_back(*lo + static_cast<double>(k) * *step);
    }
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_double(trim(item));
    if (!v) {
      return std::nullopt;
    }
    out.push_back(*v);
  }
  if (out.empty()) {
    return std::nullopt;
  }
  return out;
}

}  // namespace detail

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Splits a config file into entries; syntax errors are reported, not thrown.
inline std::vector<ConfigEntry> parse_config_entries(const std::string& text,
                                                     std::vector<std::string>& errors) {
  std::vector<ConfigEntry> entries;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected `key = value`");
      continue;
    }
    ConfigEntry entry;
    entry.key = detail::trim(stripped.substr(0, eq));
    entry.value = detail::trim(stripped.substr(eq + 1));
    entry.line = line_no;
    if (entry.key.empty() || entry.value.empty()) {
      errors.push_back("line " + std::to_string(line_no) + ": empty key or value");
      continue;
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace csifb
