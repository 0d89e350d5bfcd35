#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "amdn/errors.hpp"

namespace amdn {

// Flat `key = value` text. Blank lines and text after '#' are ignored; keys
// are lower-case identifiers and may appear once per file.
class FlatConfig {
 public:
  static FlatConfig parse(std::string_view text) {
    FlatConfig c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("config line " + std::to_string(no) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (!valid_key(key)) throw FormatError("config line " + std::to_string(no) + ": bad key '" + key + "'");
      if (c.values_.count(key)) throw FormatError("config line " + std::to_string(no) + ": duplicate key '" + key + "'");
      c.values_[key] = value;
    }
    return c;
  }

  static bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char ch : k)
      if (!((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_')) return false;
    return true;
  }

  std::string text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  bool has(const std::string& k) const { return values_.count(k) > 0; }
  void set(const std::string& k, std::string v) { values_[k] = std::move(v); }
  void erase(const std::string& k) { values_.erase(k); }
  const std::map<std::string, std::string>& values() const { return values_; }

  // Keys of `over` replace ours.
  void merge(const FlatConfig& over) {
    for (const auto& [k, v] : over.values_) values_[k] = v;
  }

  const std::string& get(const std::string& k) const {
    auto it = values_.find(k);
    if (it == values_.end()) throw ConfigError("missing config key '" + k + "'");
    return it->second;
  }

  double get_double(const std::string& k) const {
    const std::string& s = get(k);
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || errno) throw ConfigError("config key '" + k + "': '" + s + "' is not a number");
    return v;
  }

  std::int64_t get_int(const std::string& k) const {
    const std::string& s = get(k);
    char* end = nullptr;
    errno = 0;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno) throw ConfigError("config key '" + k + "': '" + s + "' is not an integer");
    return v;
  }

  std::uint64_t get_uint(const std::string& k) const {
    const std::string& s = get(k);
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || s.find('-') != std::string::npos || *end != '\0' || errno)
      throw ConfigError("config key '" + k + "': '" + s + "' is not a nonnegative integer");
    return v;
  }

  bool get_bool(const std::string& k) const {
    const std::string& s = get(k);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key '" + k + "': '" + s + "' is not a boolean");
  }

  std::vector<std::string> get_list(const std::string& k) const { return split_list(get(k)); }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace amdn
