#pragma once

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <string>
#include <type_traits>

namespace rabigauge::cli {

// 12 significant digits; every NaN prints as "nan".
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      body_ += first ? "" : ",";
      body_ += h;
      first = false;
    }
    body_ += '\n';
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((body_ += (first ? "" : ","), body_ += cell(fields), first = false), ...);
    body_ += '\n';
  }

  const std::string& str() const noexcept { return body_; }

 private:
  template <class T>
  static std::string cell(const T& v) {
    if constexpr (std::is_floating_point_v<T>)
      return format_number(v);
    else if constexpr (std::is_integral_v<T>)
      return std::to_string(v);
    else
      return std::string(v);
  }

  std::string body_;
};

}  // namespace rabigauge::cli
