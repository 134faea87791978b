#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>

namespace rpl::detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Returns [first, last) of s with surrounding whitespace removed, relative to s.
inline std::pair<std::size_t, std::size_t> trim_bounds(std::string_view s) {
  std::size_t first = 0;
  std::size_t last = s.size();
  while (first < last && is_space(s[first])) ++first;
  while (last > first && is_space(s[last - 1])) --last;
  return {first, last};
}

inline std::string_view trim(std::string_view s) {
  auto [first, last] = trim_bounds(s);
  return s.substr(first, last - first);
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace rpl::detail
