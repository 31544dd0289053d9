#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace detfuse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an input contract (bad box, mixed image ids, layout mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of a mathematical operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Weighted average requested over weights that sum to zero.
class DegenerateWeightsError : public DomainError {
 public:
  using DomainError::DomainError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed record in a text file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace detfuse
