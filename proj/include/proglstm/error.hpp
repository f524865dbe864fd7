#pragma once

#include <stdexcept>
#include <string>

namespace proglstm {

/// Precondition violated by the caller (bad dimensions, out-of-range counts).
class ArgumentError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// No configuration satisfies the requested constraints.
class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent on-disk data.
class FormatError : public std::runtime_error {
public:
  enum class Kind {
    io,
    hash_mismatch,
    truncated,
    unknown_version,
    structural,
    endianness,
  };

  FormatError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

} // namespace proglstm
