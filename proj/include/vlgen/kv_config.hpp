#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace vlgen {

// Flat `key = value` file. '#' starts a comment; blank lines ignored;
// values may be double-quoted to keep leading/trailing spaces.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& source = "<string>");
  static KeyValueConfig load(const std::filesystem::path& file);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

}  // namespace vlgen
