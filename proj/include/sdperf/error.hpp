#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdperf {

// Base of every error raised by the toolkit. The CLI maps these to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text; line is 1-based, 0 when not line-oriented.
struct ParseError : Error {
  ParseError(std::size_t line, const std::string& what)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  std::size_t line;
};

struct ValidationError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct AlignmentError : Error {
  using Error::Error;
};

struct LookupError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace sdperf
