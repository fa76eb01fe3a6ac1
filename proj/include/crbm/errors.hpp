#pragma once

#include <stdexcept>
#include <string>

namespace crbm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset header/schema mismatch or malformed schema file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A cell value that is not admissible under its variable spec.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition of an operation.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Exact-enumeration oracles only support tiny all-binary models.
class OracleScopeError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

/// Degenerate regression input (zero-variance regressor, too few points).
class FitError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace crbm
