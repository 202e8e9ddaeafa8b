#pragma once

#include <stdexcept>
#include <string>

namespace epivar {

enum class ErrorKind {
  rejected_parameters,  // non-stationary coefficients, non-PD noise covariance
  construction,         // invalid scenario or interval layout
  insufficient_lags,
  insufficient_data,
  ill_posed_design,
  parameter,
  covariance,
  contract,
  parse,
  io,
  configuration,
  numerical,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind drives
/// the CLI exit code: input problems map to 2, numerical failures to 3.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline bool is_input_error(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ill_posed_design:
    case ErrorKind::covariance:
    case ErrorKind::numerical:
      return false;
    default:
      return true;
  }
}

}  // namespace epivar
