#pragma once

#include <stdexcept>
#include <string>

namespace rabigauge {

// Raised when an iterative numerical procedure cannot reach its target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cutoff doubling hit its cap before the spectrum settled.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double last_delta)
      : NumericalError(what), last_delta_(last_delta) {}
  double last_delta() const noexcept { return last_delta_; }

 private:
  double last_delta_;
};

}  // namespace rabigauge
