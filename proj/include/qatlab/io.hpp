#pragma once

// CSV output and flat `key = value` run configuration.
//
// CSV files start with `# key = value` comment lines echoing the resolved
// config, then a header row, then data rows. Decimal point is '.', lines end in LF.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qatlab/error.hpp"

namespace qatlab {

/// Thrown for unreadable inputs and malformed config files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("format_number: conversion failed");
  return std::string(buf, end);
}

/// Like format_number but always marks a real: 3 -> "3.0".
inline std::string format_real(double v) {
  std::string s = format_number(v);
  if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Resolved flat configuration. Later layers override earlier ones (defaults < file < command line).
class RunConfig {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  void merge(const std::map<std::string, std::string>& layer) {
    for (const auto& [k, v] : layer) values_[k] = v;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw DomainError("missing config key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key) const {
    const std::string& s = get(key);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw DomainError("config key '" + key + "' is not a number: " + s);
    return v;
  }

  std::int64_t get_int(const std::string& key) const {
    const std::string& s = get(key);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw DomainError("config key '" + key + "' is not an integer: " + s);
    return v;
  }

  std::uint64_t get_uint(const std::string& key) const {
    const std::int64_t v = get_int(key);
    if (v < 0) throw DomainError("config key '" + key + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
  }

  bool get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "off" || s == "no") return false;
    throw DomainError("config key '" + key + "' is not a boolean: " + s);
  }

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// `# key = value` lines in key order.
  void write_header(std::ostream& os) const {
    for (const auto& [k, v] : values_) os << "# " << k << " = " << v << '\n';
  }

 private:
  std::map<std::string, std::string> values_;
};

/// Parses `key = value` lines; blank lines and lines starting with '#' are skipped.
inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw IoError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw IoError("config line " + std::to_string(line_no) + ": empty key");
    out[std::string(key)] = std::string(value);
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path + "'");
  return ss.str();
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  return parse_config_text(read_file(path));
}

/// Whitespace-separated numbers; keeps the original tokens for echoing.
struct NumericInput {
  std::vector<std::string> tokens;
  std::vector<double> values;
};

inline NumericInput parse_numbers(std::string_view text) {
  NumericInput out;
  std::istringstream ss{std::string(text)};
  std::string tok;
  while (ss >> tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw IoError("not a number: '" + tok + "'");
    out.tokens.push_back(tok);
    out.values.push_back(v);
  }
  return out;
}

}  // namespace qatlab
