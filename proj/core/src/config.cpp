#include "pwc/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pwc {

namespace {

void trim(std::string& s) {
  const char* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) {
    s.clear();
    return;
  }
  auto e = s.find_last_not_of(ws);
  s = s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-' || c == '+';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("config not found: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str(), path);
}

Config Config::from_text(const std::string& text, const std::string& origin) {
  Config config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    trim(key);
    trim(value);
    if (!valid_key(key)) {
      throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": bad key '" + key +
                                  "'");
    }
    config.kv_[key] = value;
  }
  return config;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw std::invalid_argument("bad config key '" + key + "'");
  kv_[key] = value;
}

void Config::apply_override(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must be key=value, got '" + assignment + "'");
  }
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  trim(key);
  trim(value);
  set(key, value);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw std::invalid_argument("missing required config key '" + key + "'");
  return it->second;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  long long value = 0;
  const std::string& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "' is not an integer: '" + s + "'");
  }
  return value;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  double value = 0;
  const std::string& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "' is not a number: '" + s + "'");
  }
  return value;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  if (it->second == "on" || it->second == "true" || it->second == "1") return true;
  if (it->second == "off" || it->second == "false" || it->second == "0") return false;
  throw std::invalid_argument("config key '" + key + "' is not a boolean: '" + it->second + "'");
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::uint64_t value = 0;
  const std::string& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("config key '" + key + "' is not an unsigned integer: '" + s + "'");
  }
  return value;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = kv_.find(key);
  if (it == kv_.end()) return out;
  std::string item;
  std::istringstream ss(it->second);
  while (std::getline(ss, item, ',')) {
    trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> Config::get_indexed(const std::string& key_prefix) const {
  std::vector<std::string> out;
  for (int i = 0;; ++i) {
    auto it = kv_.find(key_prefix + "." + std::to_string(i));
    if (it == kv_.end()) break;
    out.push_back(it->second);
  }
  // no gaps allowed
  for (const auto& [key, value] : kv_) {
    if (key.rfind(key_prefix + ".", 0) != 0) continue;
    const std::string suffix = key.substr(key_prefix.size() + 1);
    long long idx = -1;
    auto [p, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), idx);
    const bool numeric = ec == std::errc() && p == suffix.data() + suffix.size();
    if (!numeric || idx < 0 || idx >= static_cast<long long>(out.size())) {
      throw std::invalid_argument("config key '" + key + "': indices under '" + key_prefix +
                                  "' must be contiguous from 0");
    }
  }
  return out;
}

void Config::check_keys(const std::vector<std::string>& exact,
                        const std::vector<std::string>& prefixes) const {
  for (const auto& [key, value] : kv_) {
    bool ok = false;
    for (const std::string& e : exact) {
      if (key == e) {
        ok = true;
        break;
      }
    }
    for (const std::string& p : prefixes) {
      if (!ok && key.rfind(p + ".", 0) == 0) ok = true;
    }
    if (!ok) throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [key, value] : kv_) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  }
  return out;
}

}  // namespace pwc
