#pragma once

#include <stdexcept>
#include <string>

namespace cadad {

// Violated precondition (shape mismatch, negative delay, stale cache).
class ContractError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// NaN/Inf where finite values are required.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value, unknown key, infeasible geometry.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const char* what) {
  if (!cond) throw ContractError(what);
}

}  // namespace cadad
