#include "egoalign/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace egoalign {

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& origin) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    std::string s = line.substr(b, e - b + 1);
    if (s[0] == '#') continue;
    if (s.front() == '[' && s.back() == ']') {
      section = s.substr(1, s.size() - 2);
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = s.substr(0, eq);
    std::string val = s.substr(eq + 1);
    auto trim = [](std::string& x) {
      size_t a = x.find_first_not_of(" \t");
      size_t z = x.find_last_not_of(" \t");
      x = (a == std::string::npos) ? "" : x.substr(a, z - a + 1);
    };
    trim(key);
    trim(val);
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    kv.entries_[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  return parse(read_file(path), path);
}

const std::string& KeyValueFile::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string KeyValueFile::get_or(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueFile::get_double(const std::string& key) const {
  const std::string& v = get(key);
  char* endp = nullptr;
  double x = std::strtod(v.c_str(), &endp);
  if (endp == v.c_str()) throw ConfigError("key " + key + ": not a number: " + v);
  return x;
}

double KeyValueFile::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long KeyValueFile::get_int(const std::string& key) const {
  return static_cast<long>(get_double(key));
}

long KeyValueFile::get_int_or(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  const std::string& v = get(key);
  std::vector<double> out;
  const char* p = v.c_str();
  while (*p) {
    char* endp = nullptr;
    double x = std::strtod(p, &endp);
    if (endp == p) throw ConfigError("key " + key + ": not a number list: " + v);
    out.push_back(x);
    p = endp;
    while (*p == ' ' || *p == ',') ++p;
  }
  return out;
}

void KeyValueFile::set_double(const std::string& key, double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  entries_[key] = buf;
}

void KeyValueFile::set_int(const std::string& key, long value) {
  entries_[key] = std::to_string(value);
}

void KeyValueFile::set_doubles(const std::string& key, const std::vector<double>& values) {
  std::string s;
  char buf[32];
  for (size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    if (i) s += ',';
    s += buf;
  }
  entries_[key] = s;
}

std::string KeyValueFile::dump() const {
  std::string out;
  std::string cur_section;
  bool first = true;
  for (const auto& [k, v] : entries_) {
    size_t dot = k.find('.');
    std::string section = dot == std::string::npos ? "" : k.substr(0, dot);
    std::string key = dot == std::string::npos ? k : k.substr(dot + 1);
    if (section != cur_section || first) {
      if (!first) out += '\n';
      if (!section.empty()) out += "[" + section + "]\n";
      cur_section = section;
      first = false;
    }
    out += key + " = " + v + "\n";
  }
  return out;
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

}  // namespace egoalign
