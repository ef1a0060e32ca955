#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nbsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration (eNB config file or scenario).
class ConfigError : public Error {
 public:
  ConfigError(std::string message, std::size_t line = 0, std::size_t column = 0)
      : Error(line == 0 ? message
                        : std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Wire-format decode failure, e.g. a truncated frame.
class CodecError : public Error {
 public:
  using Error::Error;
};

}  // namespace nbsim
