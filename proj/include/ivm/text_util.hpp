#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ivm/error.hpp"

namespace ivm {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Drops a '#' comment and surrounding whitespace.
inline std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return trim(pos == std::string::npos ? line : line.substr(0, pos));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

/// Parses "name(a,b,c)" into name and trimmed parts; "name()" gives none.
inline std::pair<std::string, std::vector<std::string>> parse_call(const std::string& text,
                                                                   const std::string& where) {
  auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw ParseError(where + "expected name(...) in '" + text + "'");
  std::string name = trim(text.substr(0, open));
  if (name.empty()) throw ParseError(where + "missing name in '" + text + "'");
  std::string inner = text.substr(open + 1, text.size() - open - 2);
  if (trim(inner).empty()) return {name, {}};
  return {name, split(inner, ',')};
}

}  // namespace ivm
