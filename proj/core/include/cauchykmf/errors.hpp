#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kmf {

// Lookup of a tag or entity that does not exist.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coefficient field fails the ellipticity bound at a sample point.
class InvalidCoefficientsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Boundary value problem without a unique solution (e.g. no Dirichlet node).
class IllPosedBvpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear solver failed; message carries the residual report.
class SolverFailureError : public std::runtime_error {
 public:
  SolverFailureError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

// Nonlinear iteration exceeded its step budget; carries the increment history.
class NonlinearDivergenceError : public std::runtime_error {
 public:
  NonlinearDivergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& increment_history() const { return history_; }

 private:
  std::vector<double> history_;
};

// Operation not available for the given problem (e.g. dense operator assembly
// of a semilinear problem).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An audit was asked to check a run that is too short.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two experiment reports cannot be compared.
class InvalidComparisonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration rejected before any compute.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kmf
