#include "penlab/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace penlab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// strips an unquoted trailing comment
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool parse_number(const std::string& text, double* out) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') return false;
  *out = v;
  return true;
}

bool looks_integer(const std::string& text) {
  return text.find_first_of(".eE") == std::string::npos;
}

TomlLite::Value parse_scalar(const std::string& raw, int line_no) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
    return raw.substr(1, raw.size() - 2);
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  double num = 0.0;
  if (parse_number(raw, &num)) {
    if (looks_integer(raw)) return static_cast<std::int64_t>(num);
    return num;
  }
  throw std::runtime_error("config line " + std::to_string(line_no) +
                           ": cannot parse value '" + raw + "'");
}

TomlLite::Value parse_array(const std::string& body, int line_no) {
  std::vector<std::string> items;
  std::string cur;
  bool in_string = false;
  for (char c : body) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) items.push_back(trim(cur));

  if (items.empty()) return std::vector<std::string>{};
  if (!items[0].empty() && items[0].front() == '"') {
    std::vector<std::string> out;
    for (const std::string& it : items) {
      const TomlLite::Value v = parse_scalar(it, line_no);
      if (!std::holds_alternative<std::string>(v)) {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": mixed array types");
      }
      out.push_back(std::get<std::string>(v));
    }
    return out;
  }
  std::vector<double> out;
  for (const std::string& it : items) {
    double num = 0.0;
    if (!parse_number(it, &num)) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": cannot parse array element '" + it + "'");
    }
    out.push_back(num);
  }
  return out;
}

}  // namespace

TomlLite TomlLite::parse(const std::string& text) {
  TomlLite out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": tables are not supported");
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string raw = trim(body.substr(eq + 1));
    if (key.empty() || raw.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    if (out.entries_.count(key) != 0) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": duplicate key '" + key + "'");
    }
    if (raw.front() == '[') {
      if (raw.back() != ']') {
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": arrays must close on the same line");
      }
      out.entries_.emplace(key, parse_array(raw.substr(1, raw.size() - 2), line_no));
    } else {
      out.entries_.emplace(key, parse_scalar(raw, line_no));
    }
  }
  return out;
}

TomlLite TomlLite::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool TomlLite::has(const std::string& key) const { return entries_.count(key) != 0; }

const TomlLite::Value& TomlLite::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw std::runtime_error("missing config key: " + key);
  return it->second;
}

std::string TomlLite::get_string(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw std::runtime_error("config key '" + key + "' must be a string");
}

std::int64_t TomlLite::get_int(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  throw std::runtime_error("config key '" + key + "' must be an integer");
}

double TomlLite::get_double(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw std::runtime_error("config key '" + key + "' must be a number");
}

bool TomlLite::get_bool(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw std::runtime_error("config key '" + key + "' must be a boolean");
}

std::vector<std::string> TomlLite::get_string_array(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
  if (const auto* s = std::get_if<std::string>(&v)) return {*s};
  throw std::runtime_error("config key '" + key + "' must be a string array");
}

std::vector<double> TomlLite::get_double_array(const std::string& key) const {
  const Value& v = at(key);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  if (const auto* d = std::get_if<double>(&v)) return {*d};
  if (const auto* i = std::get_if<std::int64_t>(&v)) return {static_cast<double>(*i)};
  throw std::runtime_error("config key '" + key + "' must be a numeric array");
}

}  // namespace penlab
