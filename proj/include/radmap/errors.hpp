#pragma once

#include <stdexcept>
#include <string>

namespace radmap {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyFrame : Error {
  using Error::Error;
};

struct GimbalLock : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct DegenerateCovariance : Error {
  using Error::Error;
};

struct DegenerateGeometry : Error {
  using Error::Error;
};

struct NoGroundFound : Error {
  using Error::Error;
};

struct TooShort : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace radmap
