#pragma once

#include <stdexcept>

namespace krrd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};
struct DomainViolation : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct UnsupportedDerivativeOrder : Error {
  using Error::Error;
};
struct FactorizationFailed : Error {
  using Error::Error;
};
struct MissingSigma2 : Error {
  using Error::Error;
};
struct SmoothnessViolation : Error {
  using Error::Error;
};
struct NonContractive : Error {
  using Error::Error;
};
struct DegenerateSystem : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

}  // namespace krrd
