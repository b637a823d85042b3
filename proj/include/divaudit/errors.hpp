/// @file errors.hpp
/// @brief Exception types shared by the library and the command-line tool.

#pragma once

#include <stdexcept>
#include <string>

namespace divaudit {

/// Invalid configuration value. The message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or corpus format problem.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed record inside a JSON-Lines file.
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : IoError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Remote backend failure (transport, protocol, or exhausted retries).
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace divaudit
