#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pwc {

// Flat `key = value` configuration: '#' starts a comment, keys may be
// dotted (net.layer.0), later overrides win. Values keep internal spaces so
// layer descriptors like "pointconv r=0.3 R=3 cout=16" parse as one value.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path);
  static Config from_text(const std::string& text, const std::string& origin = "<text>");

  void set(const std::string& key, const std::string& value);
  // "key=value" command line override
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  // Comma-separated list values.
  std::vector<std::string> get_list(const std::string& key) const;

  // Values of key_prefix.0, key_prefix.1, ... which must be contiguous
  // from 0.
  std::vector<std::string> get_indexed(const std::string& key_prefix) const;

  // Rejects any key that is neither in `exact` nor matches an entry of
  // `prefixes` followed by ".<number>".
  void check_keys(const std::vector<std::string>& exact,
                  const std::vector<std::string>& prefixes) const;

  // Sorted `key = value` lines; parsing the dump reproduces this config.
  std::string dump() const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace pwc
