#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace esci {

/// Flat `key = value` configuration. Lines starting with '#' are comments;
/// lists are comma separated. Keys are dotted (e.g. `tracking.dt`).
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_words(const std::string& key, const std::vector<std::string>& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::vector<double>& values);

  /// Keys in sorted order, one `key = value` per line.
  void write(std::ostream& out) const;
  std::string to_string() const;

  /// FNV-1a over the serialized form.
  std::uint64_t fingerprint() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// 16 hex digits.
std::string hex64(std::uint64_t v);

}  // namespace esci
