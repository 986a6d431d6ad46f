#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsep {

/// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Expression text could not be parsed; `offset` is the byte position.
struct parse_error : error {
  parse_error(std::size_t off, const std::string& what)
      : error("parse error at offset " + std::to_string(off) + ": " + what), offset(off) {}
  std::size_t offset;
};

/// Evaluation hit a singular locus or left a function's real domain.
struct domain_error : error {
  using error::error;
};

/// A precondition on the inputs was violated (bad arity, order, shape...).
struct invalid_input : error {
  using error::error;
};

}  // namespace rsep
