#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace ytlc::toml {

// Minimal TOML reader covering what the config files use: [section] headers,
// string/integer/float/boolean values, comments, and dotted keys flattened
// to "section.key".

using Value = std::variant<std::string, std::int64_t, double, bool>;
using Table = std::map<std::string, Value>;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

std::optional<std::string> get_str(const Table& t, const std::string& key);
std::optional<std::int64_t> get_int(const Table& t, const std::string& key);
std::optional<double> get_double(const Table& t, const std::string& key);
std::optional<bool> get_bool(const Table& t, const std::string& key);

std::string quote(const std::string& s);

}  // namespace ytlc::toml
