#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace egoalign {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` file with `[section]` headers. Keys are
/// flattened to "section.key". Lines starting with '#' are comments.
class KeyValueFile {
 public:
  KeyValueFile() = default;
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueFile load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int_or(const std::string& key, long fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;  // comma-separated

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long value);
  void set_doubles(const std::string& key, const std::vector<double>& values);

  const std::map<std::string, std::string>& entries() const { return entries_; }
  /// Serialize grouped by section, keys sorted; %.17g for numbers set via
  /// set_double so round-trips are bit-exact.
  std::string dump() const;

 private:
  std::map<std::string, std::string> entries_;
};

/// FNV-1a 64-bit over raw bytes; used for content hashes in manifests.
uint64_t fnv1a64(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t fnv1a64(const std::string& s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace egoalign
