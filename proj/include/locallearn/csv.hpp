#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "locallearn/error.hpp"

namespace locallearn {

/// Shortest round-trip text for a double, independent of the locale.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(&out) {}

  template <typename... Ts>
  void row(const Ts&... fields) {
    bool first = true;
    ((emit(fields, first)), ...);
    *out_ << "\r\n";
  }

  void row(const std::vector<std::string>& fields) {
    bool first = true;
    for (const auto& f : fields) emit(f, first);
    *out_ << "\r\n";
  }

 private:
  template <typename T>
  void emit(const T& v, bool& first) {
    if (!first) *out_ << ',';
    first = false;
    if constexpr (std::is_same_v<T, bool>)
      *out_ << (v ? "true" : "false");
    else if constexpr (std::is_floating_point_v<T>)
      *out_ << format_number(static_cast<double>(v));
    else if constexpr (std::is_integral_v<T>)
      *out_ << std::to_string(v);
    else
      *out_ << csv_escape(std::string(v));
  }

  std::ostream* out_;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path);
  return out;
}

}  // namespace locallearn
