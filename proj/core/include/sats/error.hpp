#pragma once

#include <stdexcept>
#include <string>

namespace sats {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented contract (bad config, bad label value, size mismatch).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf showed up in activations, losses or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace sats
