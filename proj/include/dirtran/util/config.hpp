#ifndef DIRTRAN_UTIL_CONFIG_HPP
#define DIRTRAN_UTIL_CONFIG_HPP

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dirtran/errors.hpp"

namespace dirtran {

/// Flat key = value file. '#' starts a comment, values may be
/// comma-separated lists, keys may repeat (e.g. one obstacle per line).
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_stream(in, path);
  }

  static KeyValueFile parse_stream(std::istream& in,
                                   const std::string& origin = "<stream>") {
    KeyValueFile kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": expected 'key = value'");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": empty key");
      }
      kv.entries_.emplace_back(key, value);
    }
    return kv;
  }

  bool has(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.first == key; });
  }

  std::string get(const std::string& key) const {
    const std::string* found = nullptr;
    for (const auto& [k, v] : entries_) {
      if (k == key) found = &v;
    }
    if (!found) throw ConfigError("missing config key '" + key + "'");
    return *found;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
  }

  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) {
      if (k == key) out.push_back(v);
    }
    return out;
  }

  std::vector<std::string> list(const std::string& key) const {
    return split_list(get(key));
  }

  double number(const std::string& key) const {
    return to_number(get(key), key);
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) const {
    return static_cast<int>(to_number(get(key), key));
  }

  int integer_or(const std::string& key, int fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
  }

  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  static std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(value);
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double to_number(const std::string& value, const std::string& key) {
    if (value == "inf") return std::numeric_limits<double>::infinity();
    if (value == "-inf") return -std::numeric_limits<double>::infinity();
    try {
      size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': '" + value +
                        "' is not a number");
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace dirtran

#endif  // DIRTRAN_UTIL_CONFIG_HPP
