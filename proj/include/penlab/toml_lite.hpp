#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace penlab {

// Reader for the flat TOML subset used by the config files: comments,
// `key = value` lines with string, integer, float, boolean and
// one-dimensional array values. Unknown syntax is rejected.
class TomlLite {
 public:
  using Value = std::variant<std::string, std::int64_t, double, bool,
                             std::vector<std::string>, std::vector<double>>;

  static TomlLite parse_file(const std::string& path);
  static TomlLite parse(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;  // accepts integers
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& key) const;
  std::vector<double> get_double_array(const std::string& key) const;

  const std::map<std::string, Value>& entries() const { return entries_; }

 private:
  const Value& at(const std::string& key) const;
  std::map<std::string, Value> entries_;
};

}  // namespace penlab
