#include "ytlc/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace ytlc::toml {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

Value parse_value(const std::string& raw, long lineno) {
  std::string v = trim(raw);
  if (v.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ParseError("line " + std::to_string(lineno) + ": unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        ++i;
        switch (v[i]) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: out.push_back(v[i]);
        }
      } else {
        out.push_back(v[i]);
      }
    }
    return out;
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.find_first_of(".eE") != std::string::npos && v != "inf") {
    try {
      return std::stod(v);
    } catch (...) {
      throw ParseError("line " + std::to_string(lineno) + ": bad number '" + v + "'");
    }
  }
  std::int64_t iv = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), iv);
  if (ec == std::errc() && p == v.data() + v.size()) return iv;
  try {
    return std::stod(v);
  } catch (...) {
    throw ParseError("line " + std::to_string(lineno) + ": bad value '" + v + "'");
  }
}

}  // namespace

Table parse(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  std::string section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ParseError("line " + std::to_string(lineno) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    t[full] = parse_value(line.substr(eq + 1), lineno);
  }
  return t;
}

Table parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> get_str(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  if (auto* s = std::get_if<std::string>(&it->second)) return *s;
  return std::nullopt;
}

std::optional<std::int64_t> get_int(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  return std::nullopt;
}

std::optional<double> get_double(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&it->second))
    return static_cast<double>(*i);
  return std::nullopt;
}

std::optional<bool> get_bool(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  if (auto* b = std::get_if<bool>(&it->second)) return *b;
  return std::nullopt;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace ytlc::toml
