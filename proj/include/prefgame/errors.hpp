#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace prefgame {

// Error taxonomy shared by the C++ core; the C API maps these onto status codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// A policy places mass where the reference policy has none (KL undefined).
struct SupportViolation : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Iterative routine hit its cap without meeting its certificate.
// Carries the best iterate seen (per-prompt rows) and its residual.
struct ConvergenceError : Error {
  ConvergenceError(const std::string& what, std::vector<std::vector<double>> iterate,
                   double res)
      : Error(what), last_iterate(std::move(iterate)), residual(res) {}
  explicit ConvergenceError(const std::string& what) : Error(what), residual(0.0) {}
  std::vector<std::vector<double>> last_iterate;
  double residual;
};

}  // namespace prefgame
