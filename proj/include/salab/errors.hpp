#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace salab {

/// A chain iterate left the admissible region (||theta||_inf > divergence
/// guard). Carries the step index at which it happened.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int64_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int64_t step() const { return step_; }

 private:
  int64_t step_;
};

/// An iterative solver hit its iteration cap. Carries the last residual.
class NoConvergenceError : public std::runtime_error {
 public:
  NoConvergenceError(double residual, const std::string& what)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// The requested configuration is outside what the implementation supports
/// (e.g. non-Gaussian noise in the stepsize-ratio coupling, assignment sizes
/// above the cap).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed config or data file. Message carries field/line diagnostics.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure (open/read/write).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace salab
