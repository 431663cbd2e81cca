#pragma once

#include <stdexcept>

namespace cnmf {

// Dimension mismatches and malformed configurations are call-site errors;
// InputError covers data that violates a precondition (negative entries,
// non-finite values); IoError/ParseError cover files and their contents.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : IoError {
  using IoError::IoError;
};

}  // namespace cnmf
