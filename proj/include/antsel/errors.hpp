#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace antsel {

enum class ErrorKind {
  Dimension,
  Format,
  DegenerateInput,
  Domain,
  Precondition,
  Numeric,
  Singularity,
  Configuration,
  CombinatorialGuard,
  Io,
};

const char* to_string(ErrorKind kind);

/// Base class of every error thrown by the library. The kind drives the CLI
/// exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::Dimension, what) {}
};

/// Malformed channel file. `offset` is the byte position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(ErrorKind::Format,
              what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what)
      : Error(ErrorKind::DegenerateInput, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ErrorKind::Domain, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::Precondition, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::Numeric, what) {}
};

/// Gram matrix too ill-conditioned to invert on some subcarrier.
class SingularityError : public Error {
 public:
  SingularityError(std::size_t subcarrier, double condition)
      : Error(ErrorKind::Singularity,
              "Gram matrix singular on subcarrier " +
                  std::to_string(subcarrier) + " (condition number " +
                  std::to_string(condition) + ")"),
        subcarrier_(subcarrier) {}

  std::size_t subcarrier() const noexcept { return subcarrier_; }

 private:
  std::size_t subcarrier_;
};

/// Invalid configuration; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(ErrorKind::Configuration, field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class CombinatorialGuardError : public Error {
 public:
  explicit CombinatorialGuardError(double count)
      : Error(ErrorKind::CombinatorialGuard,
              "exhaustive search refused: " + std::to_string(count) +
                  " subsets exceed the limit of 1000000"),
        count_(count) {}

  double count() const noexcept { return count_; }

 private:
  double count_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(ErrorKind::Io, path + ": " + what) {}
};

}  // namespace antsel
