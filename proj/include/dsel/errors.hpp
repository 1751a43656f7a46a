#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsel {

// Violated precondition or layout mismatch. Always a programming error.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite value or ill-conditioned system encountered during computation.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::ptrdiff_t example_index = -1)
      : std::runtime_error(example_index >= 0
                               ? what + " (example index " + std::to_string(example_index) + ")"
                               : what),
        example_index_(example_index) {}

  std::ptrdiff_t example_index() const { return example_index_; }

 private:
  std::ptrdiff_t example_index_;
};

// Invalid user configuration. Line/column are 1-based, 0 when not applicable.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " +
                                          std::to_string(column) + ": " + what
                                    : what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

#define DSEL_REQUIRE(cond, msg)                  \
  do {                                           \
    if (!(cond)) throw ::dsel::ContractError(msg); \
  } while (0)

}  // namespace dsel
