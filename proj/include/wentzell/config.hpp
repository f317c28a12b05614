#pragma once
// Line-numbered INI-style configuration: [section] headers, key = value
// pairs, '#' or ';' comments (whole-line or trailing), no quoting.  All
// lookup errors carry "path:line:" context so a bad file points at itself.

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wentzell/common.hpp"

namespace wentzell::config {

struct ParseError : Error {
  using Error::Error;
};

struct Entry {
  std::string value;
  int line = 0;
};

struct Config {
  std::string path;  // label used in error messages
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::map<std::string, int> section_lines;

  bool has_section(const std::string& s) const { return sections.count(s) != 0; }

  const Entry* find(const std::string& s, const std::string& k) const {
    const auto sec = sections.find(s);
    if (sec == sections.end()) return nullptr;
    const auto it = sec->second.find(k);
    return it == sec->second.end() ? nullptr : &it->second;
  }

  [[noreturn]] void missing(const std::string& s, const std::string& k) const {
    throw ParseError(path + ": missing key '" + k + "' in section [" + s + "]");
  }

  std::string get_string(const std::string& s, const std::string& k) const {
    const Entry* e = find(s, k);
    if (!e) missing(s, k);
    return e->value;
  }

  std::string get_string(const std::string& s, const std::string& k,
                         const std::string& fallback) const {
    const Entry* e = find(s, k);
    return e ? e->value : fallback;
  }

  double parse_number(const Entry& e, const std::string& k) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      while (pos < e.value.size() && (e.value[pos] == ' ' || e.value[pos] == '\t')) ++pos;
      if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(e.line) + ": key '" + k +
                       "': not a number: '" + e.value + "'");
    }
  }

  double get_double(const std::string& s, const std::string& k) const {
    const Entry* e = find(s, k);
    if (!e) missing(s, k);
    return parse_number(*e, k);
  }

  double get_double(const std::string& s, const std::string& k, double fallback) const {
    const Entry* e = find(s, k);
    return e ? parse_number(*e, k) : fallback;
  }

  long get_long(const std::string& s, const std::string& k, long fallback) const {
    const Entry* e = find(s, k);
    if (!e) return fallback;
    const double v = parse_number(*e, k);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v)
      throw ParseError(path + ":" + std::to_string(e->line) + ": key '" + k +
                       "': expected an integer, got '" + e->value + "'");
    return n;
  }

  long require_long(const std::string& s, const std::string& k) const {
    if (!find(s, k)) missing(s, k);
    return get_long(s, k, 0);
  }

  std::vector<double> get_list(const std::string& s, const std::string& k) const {
    const Entry* e = find(s, k);
    if (!e) missing(s, k);
    std::vector<double> out;
    std::string item;
    std::istringstream ss(e->value);
    while (std::getline(ss, item, ',')) {
      Entry tmp{item, e->line};
      out.push_back(parse_number(tmp, k));
    }
    if (out.empty())
      throw ParseError(path + ":" + std::to_string(e->line) + ": key '" + k + "': empty list");
    return out;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

inline Config parse_string(const std::string& text, const std::string& label) {
  Config cfg;
  cfg.path = label;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError(label + ":" + std::to_string(lineno) + ": unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ParseError(label + ":" + std::to_string(lineno) + ": empty section name");
      if (!cfg.sections.count(section)) {
        cfg.sections[section];
        cfg.section_lines[section] = lineno;
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(label + ":" + std::to_string(lineno) +
                       ": expected '[section]' or 'key = value', got '" + line + "'");
    if (section.empty())
      throw ParseError(label + ":" + std::to_string(lineno) + ": key outside any [section]");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ParseError(label + ":" + std::to_string(lineno) + ": empty key");
    if (value.empty())
      throw ParseError(label + ":" + std::to_string(lineno) + ": empty value for key '" + key +
                       "'");
    auto& sec = cfg.sections[section];
    if (sec.count(key))
      throw ParseError(label + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                       "' in section [" + section + "]");
    sec[key] = Entry{value, lineno};
  }
  return cfg;
}

inline Config parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open configuration file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

}  // namespace wentzell::config
