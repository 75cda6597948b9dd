#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltor {

// Shortest round-trip representation of a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// "key = value" file with '#' comments. Keys keep insertion order on write.
class KeyValueFile {
 public:
  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
  }
  void set_double(const std::string& key, double v) { set(key, format_double(v)); }
  void set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error("missing key: " + key);
    return it->second;
  }
  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  double get_double(const std::string& key) const { return std::stod(get(key)); }
  double get_double_or(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : std::stod(it->second);
  }
  long long get_int(const std::string& key) const { return std::stoll(get(key)); }

  const std::vector<std::string>& keys() const { return order_; }

  std::string serialize() const {
    std::ostringstream os;
    for (const auto& k : order_) os << k << " = " << values_.at(k) << "\n";
    return os.str();
  }

  // Hash over sorted key/value pairs, insensitive to declaration order.
  std::uint64_t content_hash() const {
    std::map<std::string, std::string> sorted(values_.begin(), values_.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [k, v] : sorted) {
      h = fnv1a64(k, h);
      h = fnv1a64("=", h);
      h = fnv1a64(v, h);
      h = fnv1a64("\n", h);
    }
    return h;
  }

  static KeyValueFile parse(std::istream& in) {
    KeyValueFile kv;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!key.empty()) kv.set(key, value);
    }
    return kv;
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    return parse(in);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << serialize();
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

// Columnar text table: '#'-prefixed metadata lines, one header line with
// column names, tab-separated rows.
class Table {
 public:
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  KeyValueFile meta;

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw std::runtime_error("table: no column named " + name);
  }

  void write(std::ostream& os) const {
    for (const auto& k : meta.keys()) os << "# " << k << " = " << meta.get(k) << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "\t" : "") << columns[i];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "\t" : "") << format_double(row[i]);
      os << "\n";
    }
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    write(out);
  }

  static Table read(std::istream& in) {
    Table t;
    std::string line;
    std::ostringstream meta_text;
    bool header_done = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        meta_text << line.substr(1) << "\n";
        continue;
      }
      std::istringstream ls(line);
      if (!header_done) {
        std::string name;
        while (ls >> name) t.columns.push_back(name);
        header_done = true;
        continue;
      }
      std::vector<double> row;
      row.reserve(t.columns.size());
      double v;
      while (ls >> v) row.push_back(v);
      if (!row.empty()) t.rows.push_back(std::move(row));
    }
    std::istringstream ms(meta_text.str());
    t.meta = KeyValueFile::parse(ms);
    return t;
  }

  static Table load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    return read(in);
  }
};

}  // namespace ltor
