#pragma once

// Flat key = value configuration files.  '#' starts a comment, values keep
// their raw text and are parsed by the typed getters, lists use [a, b, c].
// Serialization is deterministic (keys sorted) so configs diff cleanly.

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwlab/grid.hpp"

namespace dwlab {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line)
      : std::runtime_error("config line " + std::to_string(line) + ": " + what),
        line_(line) {}
  explicit ConfigError(const std::string& what)
      : std::runtime_error("config: " + what), line_(0) {}
  int line() const { return line_; }

 private:
  int line_;
};

class Config {
 public:
  static Config parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("expected key = value", lineno);
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key", lineno);
      for (char c : key)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
          throw ConfigError("bad character in key '" + key + "'", lineno);
      if (val.empty()) throw ConfigError("empty value for '" + key + "'", lineno);
      cfg.kv_[key] = val;
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open config", path);
    std::string text;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, fp)) > 0) text.append(buf, got);
    std::fclose(fp);
    return parse_string(text);
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }
  std::string get_str(const std::string& key, const std::string& dflt) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
  }

  double get_double(const std::string& key) const {
    return to_double(key, get_str(key));
  }
  double get_double(const std::string& key, double dflt) const {
    return has(key) ? get_double(key) : dflt;
  }

  long get_int(const std::string& key) const {
    const std::string v = get_str(key);
    std::size_t pos = 0;
    long out = 0;
    try {
      out = std::stol(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' is not an integer: " + v);
    }
    if (pos != v.size())
      throw ConfigError("'" + key + "' is not an integer: " + v);
    return out;
  }
  long get_int(const std::string& key, long dflt) const {
    return has(key) ? get_int(key) : dflt;
  }

  bool get_bool(const std::string& key) const {
    const std::string v = get_str(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "' is not a boolean: " + v);
  }
  bool get_bool(const std::string& key, bool dflt) const {
    return has(key) ? get_bool(key) : dflt;
  }

  std::vector<double> get_list(const std::string& key) const {
    const std::string v = get_str(key);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
      throw ConfigError("'" + key + "' is not a [..] list: " + v);
    std::vector<double> out;
    std::string item;
    std::istringstream in(v.substr(1, v.size() - 2));
    while (std::getline(in, item, ',')) {
      const std::string s = trim(item);
      if (s.empty()) throw ConfigError("empty element in list '" + key + "'");
      out.push_back(to_double(key, s));
    }
    if (out.empty()) throw ConfigError("empty list for '" + key + "'");
    return out;
  }
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& dflt) const {
    return has(key) ? get_list(key) : dflt;
  }

  void set(const std::string& key, const std::string& value) {
    kv_[key] = value;
  }
  void set_double(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    kv_[key] = buf;
  }

  const std::map<std::string, std::string>& items() const { return kv_; }

  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : kv_) {  // std::map iterates sorted
      out += k;
      out += " = ";
      out += v;
      out += "\n";
    }
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }
  static double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' is not a number: " + v);
    }
    if (pos != v.size())
      throw ConfigError("'" + key + "' is not a number: " + v);
    return out;
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace dwlab
