// SPDX-License-Identifier: Apache-2.0
#include "voxcap/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace voxcap {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("bad section header at line " + std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(line_no));
    cfg.values_[section.empty() ? key : section + "." + key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::require_str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required config key: " + key);
  return it->second;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer: " + it->second);
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an unsigned integer: " + it->second);
  }
}

double Config::get_real(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + it->second);
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + " is not a boolean: " + v);
}

void Config::set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }
void Config::set_u64(const std::string& key, std::uint64_t v) { set(key, std::to_string(v)); }

void Config::set_real(const std::string& key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  set(key, buf);
}

void Config::set_bool(const std::string& key, bool v) { set(key, v ? "true" : "false"); }

std::string Config::dump() const {
  std::ostringstream out;
  // Bare keys first: once a [section] header is emitted there is no way back
  // to the sectionless namespace.
  bool wrote_any = false;
  for (const auto& [full_key, value] : values_) {
    if (full_key.rfind('.') == std::string::npos) {
      out << full_key << " = " << value << "\n";
      wrote_any = true;
    }
  }
  std::string section;
  bool in_section = false;
  for (const auto& [full_key, value] : values_) {
    const std::size_t dot = full_key.rfind('.');
    if (dot == std::string::npos) continue;
    const std::string sec = full_key.substr(0, dot);
    if (sec != section || !in_section) {
      if (wrote_any) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
      in_section = true;
      wrote_any = true;
    }
    out << full_key.substr(dot + 1) << " = " << value << "\n";
  }
  return out.str();
}

}  // namespace voxcap
