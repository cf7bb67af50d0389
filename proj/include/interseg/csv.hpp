#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace interseg::csv {

/// Splits one CSV line into views. Double-quoted fields have their quotes
/// stripped; embedded separators inside quotes are kept. Trailing '\r' is ignored.
void split(std::string_view line, std::vector<std::string_view>& out, char sep = ',');

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_int(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Shortest representation that parses back to the same double.
std::string format_double(double v);
std::string format_float(float v);

/// Reads the next line that is not a `#` comment. Returns false at EOF.
bool next_data_line(std::istream& in, std::string& line);

/// Maps header names to column positions; throws SchemaError naming
/// any required column that is absent.
class Header {
 public:
  explicit Header(std::string_view line);
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t require(std::string_view name) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

}  // namespace interseg::csv
