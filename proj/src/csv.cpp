#include "interseg/csv.hpp"

#include "interseg/error.hpp"

namespace interseg::csv {

void split(std::string_view line, std::vector<std::string_view>& out, char sep) {
  out.clear();
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t i = 0;
  while (true) {
    if (i < line.size() && line[i] == '"') {
      const std::size_t close = line.find('"', i + 1);
      if (close == std::string_view::npos) {
        out.push_back(line.substr(i + 1));
        return;
      }
      out.push_back(line.substr(i + 1, close - i - 1));
      const std::size_t next = line.find(sep, close);
      if (next == std::string_view::npos) return;
      i = next + 1;
      continue;
    }
    const std::size_t next = line.find(sep, i);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(i));
      return;
    }
    out.push_back(line.substr(i, next - i));
    i = next + 1;
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string format_float(float v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    return true;
  }
  return false;
}

Header::Header(std::string_view line) {
  std::vector<std::string_view> cols;
  split(line, cols);
  for (auto c : cols) {
    while (!c.empty() && c.front() == ' ') c.remove_prefix(1);
    while (!c.empty() && c.back() == ' ') c.remove_suffix(1);
    names_.emplace_back(c);
  }
  // tolerate a UTF-8 byte order mark
  if (!names_.empty() && names_[0].rfind("\xEF\xBB\xBF", 0) == 0) names_[0].erase(0, 3);
}

std::optional<std::size_t> Header::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Header::require(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw SchemaError("missing required column '" + std::string(name) + "'");
}

}  // namespace interseg::csv
