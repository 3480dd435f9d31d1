#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/core/io.hpp"
#include "dfd/core/require.hpp"

namespace dfd {

/// One configuration entry. Exactly one alternative is active, selected by
/// `kind`; list values are homogeneous (all numbers or all strings).
struct ConfigValue {
  enum class Kind { string, number, boolean, number_list, string_list };
  Kind kind = Kind::string;
  std::string str;
  double number = 0.0;
  bool boolean = false;
  std::vector<double> numbers;
  std::vector<std::string> strings;

  static ConfigValue make_string(std::string s) {
    ConfigValue v;
    v.kind = Kind::string;
    v.str = std::move(s);
    return v;
  }
  static ConfigValue make_number(double x) {
    ConfigValue v;
    v.kind = Kind::number;
    v.number = x;
    return v;
  }
  static ConfigValue make_boolean(bool b) {
    ConfigValue v;
    v.kind = Kind::boolean;
    v.boolean = b;
    return v;
  }
  static ConfigValue make_numbers(std::vector<double> xs) {
    ConfigValue v;
    v.kind = Kind::number_list;
    v.numbers = std::move(xs);
    return v;
  }
  static ConfigValue make_strings(std::vector<std::string> ss) {
    ConfigValue v;
    v.kind = Kind::string_list;
    v.strings = std::move(ss);
    return v;
  }
};

/// Flat key/value configuration. Keys from sectioned sources are joined with
/// '.' ("section.key"); top-level keys stay bare.
using Config = std::map<std::string, ConfigValue>;

namespace detail {

[[noreturn]] inline void config_fail(int line, const std::string& message) {
  throw std::invalid_argument("config: line " + std::to_string(line) + ": " + message);
}

inline std::string config_trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

/// Removes a trailing comment that starts outside of any quoted string.
inline std::string config_strip_comment(const std::string& s) {
  bool in_quote = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_quote = !in_quote;
    if (s[i] == '#' && !in_quote) return s.substr(0, i);
  }
  return s;
}

inline std::string config_unquote(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"')
    config_fail(line, "malformed string literal " + s);
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      if (i + 1 >= s.size() + 1) config_fail(line, "dangling escape in string literal");
      if (s[i] == '"' || s[i] == '\\')
        out.push_back(s[i]);
      else
        config_fail(line, std::string("unsupported escape \\") + s[i]);
    } else if (s[i] == '"') {
      config_fail(line, "unescaped quote inside string literal");
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

/// Splits a bracketed array body on top-level commas.
inline std::vector<std::string> config_split_array(const std::string& body, int line) {
  std::vector<std::string> parts;
  std::string current;
  bool in_quote = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_quote = !in_quote;
    if (c == ',' && !in_quote) {
      parts.push_back(config_trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (in_quote) config_fail(line, "unterminated string inside array");
  const std::string last = config_trim(current);
  if (!last.empty()) parts.push_back(last);
  for (const std::string& p : parts)
    if (p.empty()) config_fail(line, "empty element in array");
  return parts;
}

/// Strict number parse: the whole token must be consumed (an optional
/// leading '+' is allowed).
inline double config_parse_number(const std::string& token, int line) {
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (begin != end && *begin == '+') ++begin;
  double value = 0.0;
  const std::from_chars_result r = std::from_chars(begin, end, value);
  if (r.ec != std::errc() || r.ptr != end)
    config_fail(line, "bad number '" + token + "'");
  return value;
}

inline ConfigValue config_parse_value(const std::string& raw, int line) {
  const std::string s = config_trim(raw);
  if (s.empty()) config_fail(line, "missing value");
  if (s.front() == '"') return ConfigValue::make_string(config_unquote(s, line));
  if (s == "true") return ConfigValue::make_boolean(true);
  if (s == "false") return ConfigValue::make_boolean(false);
  if (s.front() == '[') {
    if (s.back() != ']') config_fail(line, "array must close on the same line");
    const std::vector<std::string> parts =
        config_split_array(s.substr(1, s.size() - 2), line);
    if (parts.empty()) return ConfigValue::make_numbers({});
    if (parts.front().front() == '"') {
      std::vector<std::string> out;
      for (const std::string& p : parts) {
        if (p.front() != '"') config_fail(line, "mixed array element types");
        out.push_back(config_unquote(p, line));
      }
      return ConfigValue::make_strings(std::move(out));
    }
    std::vector<double> out;
    for (const std::string& p : parts) {
      if (p.front() == '"') config_fail(line, "mixed array element types");
      out.push_back(config_parse_number(p, line));
    }
    return ConfigValue::make_numbers(std::move(out));
  }
  return ConfigValue::make_number(config_parse_number(s, line));
}

inline void config_from_json_object(const nlohmann::json& obj, const std::string& prefix,
                                    Config& out, bool allow_nesting) {
  for (const auto& [key, value] : obj.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      if (!allow_nesting)
        throw std::invalid_argument("config: field '" + full + "': nesting is too deep");
      config_from_json_object(value, full, out, false);
    } else if (value.is_string()) {
      out[full] = ConfigValue::make_string(value.get<std::string>());
    } else if (value.is_boolean()) {
      out[full] = ConfigValue::make_boolean(value.get<bool>());
    } else if (value.is_number()) {
      out[full] = ConfigValue::make_number(value.get<double>());
    } else if (value.is_array()) {
      if (!value.empty() && value.front().is_string()) {
        std::vector<std::string> ss;
        for (const auto& el : value) {
          if (!el.is_string())
            throw std::invalid_argument("config: field '" + full +
                                        "': mixed array element types");
          ss.push_back(el.get<std::string>());
        }
        out[full] = ConfigValue::make_strings(std::move(ss));
      } else {
        std::vector<double> xs;
        for (const auto& el : value) {
          if (!el.is_number())
            throw std::invalid_argument("config: field '" + full +
                                        "': mixed array element types");
          xs.push_back(el.get<double>());
        }
        out[full] = ConfigValue::make_numbers(std::move(xs));
      }
    } else {
      throw std::invalid_argument("config: field '" + full + "': unsupported value type");
    }
  }
}

}  // namespace detail

/// Parses the flat dialect used by experiment configs: '#' comments,
/// '[section]' headers, and 'key = value' lines where a value is a quoted
/// string, a number, true/false, or a single-line homogeneous array.
/// Errors carry 1-based line numbers.
inline Config parse_toml_text(const std::string& text) {
  Config out;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string raw =
        text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = detail::config_trim(detail::config_strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        detail::config_fail(line_no, "malformed section header " + line);
      section = detail::config_trim(line.substr(1, line.size() - 2));
      if (section.empty()) detail::config_fail(line_no, "empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      detail::config_fail(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = detail::config_trim(line.substr(0, eq));
    if (key.empty()) detail::config_fail(line_no, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.count(full)) detail::config_fail(line_no, "duplicate key '" + full + "'");
    out[full] = detail::config_parse_value(line.substr(eq + 1), line_no);
  }
  return out;
}

/// Parses a JSON object of settings; one level of nesting maps to
/// "section.key" like the text format.
inline Config parse_json_text(const std::string& text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  if (!parsed.is_object())
    throw std::invalid_argument("config: top level must be a JSON object");
  Config out;
  detail::config_from_json_object(parsed, "", out, true);
  return out;
}

/// Loads a config file, dispatching on the extension (.json is JSON,
/// everything else uses the text dialect).
inline Config load_config(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return parse_json_text(text);
  return parse_toml_text(text);
}

[[noreturn]] inline void config_field_fail(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config: field '" + key + "' " + what);
}

inline bool config_has(const Config& c, const std::string& key) { return c.count(key) > 0; }

inline const ConfigValue& config_at(const Config& c, const std::string& key) {
  const auto it = c.find(key);
  if (it == c.end()) config_field_fail(key, "is required but missing");
  return it->second;
}

inline double config_number(const Config& c, const std::string& key) {
  const ConfigValue& v = config_at(c, key);
  if (v.kind != ConfigValue::Kind::number) config_field_fail(key, "must be a number");
  return v.number;
}

inline double config_number(const Config& c, const std::string& key, double fallback) {
  return config_has(c, key) ? config_number(c, key) : fallback;
}

inline long long config_integer(const Config& c, const std::string& key) {
  const double x = config_number(c, key);
  if (!(std::floor(x) == x) || std::abs(x) > 9.0e15)
    config_field_fail(key, "must be an integer");
  return static_cast<long long>(x);
}

inline long long config_integer(const Config& c, const std::string& key, long long fallback) {
  return config_has(c, key) ? config_integer(c, key) : fallback;
}

inline std::string config_string(const Config& c, const std::string& key) {
  const ConfigValue& v = config_at(c, key);
  if (v.kind != ConfigValue::Kind::string) config_field_fail(key, "must be a string");
  return v.str;
}

inline std::string config_string(const Config& c, const std::string& key,
                                 const std::string& fallback) {
  return config_has(c, key) ? config_string(c, key) : fallback;
}

inline bool config_bool(const Config& c, const std::string& key, bool fallback) {
  if (!config_has(c, key)) return fallback;
  const ConfigValue& v = config_at(c, key);
  if (v.kind != ConfigValue::Kind::boolean) config_field_fail(key, "must be a boolean");
  return v.boolean;
}

inline std::vector<double> config_numbers(const Config& c, const std::string& key) {
  const ConfigValue& v = config_at(c, key);
  if (v.kind == ConfigValue::Kind::number_list) return v.numbers;
  if (v.kind == ConfigValue::Kind::string_list && v.strings.empty()) return {};
  config_field_fail(key, "must be an array of numbers");
}

inline std::vector<std::string> config_strings(const Config& c, const std::string& key) {
  const ConfigValue& v = config_at(c, key);
  if (v.kind == ConfigValue::Kind::string_list) return v.strings;
  if (v.kind == ConfigValue::Kind::number_list && v.numbers.empty()) return {};
  config_field_fail(key, "must be an array of strings");
}

inline std::vector<std::uint64_t> config_seeds(const Config& c, const std::string& key) {
  const std::vector<double> xs = config_numbers(c, key);
  std::vector<std::uint64_t> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (!(std::floor(x) == x) || x < 0.0 || x > 9.0e15)
      config_field_fail(key, "must contain non-negative integers");
    out.push_back(static_cast<std::uint64_t>(x));
  }
  return out;
}

}  // namespace dfd
