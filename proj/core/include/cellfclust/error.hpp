#pragma once

#include <stdexcept>
#include <string>

namespace cellfclust {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A masked covariance block could not be factorized.
class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

/// A cluster collapsed (zero mass or all-zero eigenvalues). The multi-start
/// driver discards the start that raised it.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Invalid tuning parameters or an inconsistent combination of them.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or structurally invalid input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid synthetic-data specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace cellfclust
