#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <type_traits>

namespace cadad {

// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Accumulates comma-separated rows with '\n' line endings.
class CsvWriter {
public:
  CsvWriter& field(std::string_view s) {
    sep();
    out_.append(s);
    return *this;
  }
  template <class T>
    requires std::is_arithmetic_v<T>
  CsvWriter& field(T v) {
    sep();
    if constexpr (std::is_floating_point_v<T>)
      out_ += format_number(static_cast<double>(v));
    else
      out_ += std::to_string(v);
    return *this;
  }
  CsvWriter& empty_field() {
    sep();
    return *this;
  }
  CsvWriter& end_row() {
    out_ += '\n';
    fresh_ = true;
    return *this;
  }
  const std::string& str() const noexcept { return out_; }

private:
  void sep() {
    if (!fresh_) out_ += ',';
    fresh_ = false;
  }
  std::string out_;
  bool fresh_ = true;
};

}  // namespace cadad
