#pragma once

#include <stdexcept>
#include <string>

namespace maxentos {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed specification, bad parameters or an invalid marginal vector.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A point was passed to K, B or E outside the relevant Psi set.
class OutOfPsi : public Error {
 public:
  using Error::Error;
};

/// The multidiagonal has no absolutely continuous copula (Sigma has positive measure).
class NotAbsolutelyContinuous : public Error {
 public:
  using Error::Error;
};

/// The marginal vector admits no absolutely continuous order-statistics law.
class NotInF0 : public Error {
 public:
  using Error::Error;
};

/// The maximum-entropy law does not exist or has entropy -inf.
class Degenerate : public Error {
 public:
  using Error::Error;
};

/// The sampler could not bracket a conditional quantile.
class RootBracketFailure : public Error {
 public:
  using Error::Error;
};

class DimensionTooLarge : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

}  // namespace maxentos
