#pragma once

#include <stdexcept>
#include <string>

namespace fpu {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid parameters or mismatched inputs.
struct InvalidArgument : Error {
  using Error::Error;
};

struct WindowMismatch : Error {
  using Error::Error;
};

// Left tail of a field is not summable within the window.
struct TailError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  using Error::Error;
};

// Raised by time steppers; carries the last time at which the state was finite.
struct EvolutionError : Error {
  EvolutionError(const std::string& what, double last_good)
      : Error(what), last_good_time(last_good) {}
  double last_good_time;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Artifact digest does not match the manifest.
struct IntegrityError : Error {
  using Error::Error;
};

}  // namespace fpu
