// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mvem {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed mesh input or a violated mesh invariant.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// A local dense or global sparse factorization failed or is numerically singular.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (unsupported order, bad solver parameters, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Problem data that cannot yield a solution, e.g. incompatible Neumann flux.
class DataError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvem
