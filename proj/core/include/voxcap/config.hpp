// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "voxcap/common.hpp"

namespace voxcap {

// Flat key-value config with [section] headers. Keys are stored and looked
// up as "section.key". Values keep their raw text until a typed getter
// parses them; bad parses raise ConfigError naming the key.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set_int(const std::string& key, long long v);
  void set_u64(const std::string& key, std::uint64_t v);
  void set_real(const std::string& key, double v);
  void set_bool(const std::string& key, bool v);

  // Sections sorted, keys sorted within a section; parse(dump()) round-trips.
  std::string dump() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace voxcap
