#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace wv {
namespace csv {

// Full-precision decimal form: 17 significant digits, '.' separator.
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

inline void comment(std::ostream& os, const std::string& key, const std::string& value) {
  os << "# " << key << ": " << value << "\n";
}

inline void row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << field(fields[i]);
  }
  os << "\n";
}

}  // namespace csv
}  // namespace wv
