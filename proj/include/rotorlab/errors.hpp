#pragma once

#include <stdexcept>
#include <string>

namespace rotorlab {

/// Base class for all rotorlab errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameter values, malformed config document,
/// initial state incompatible with the grid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse: empty ensemble, too few samples for a fit, off-grid index.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Probability reached the momentum-grid edge; the run is invalid beyond
/// this kick because the discrete transform would wrap it around.
class LeakageError : public Error {
 public:
  LeakageError(long kick, double probability, double threshold)
      : Error("edge leakage " + std::to_string(probability) + " exceeds threshold " +
              std::to_string(threshold) + " at kick " + std::to_string(kick)),
        kick_(kick),
        probability_(probability) {}

  long kick() const { return kick_; }
  double probability() const { return probability_; }

 private:
  long kick_;
  double probability_;
};

/// A least-squares fit could not produce a usable result (degenerate
/// optimum, too few points above the numerical floor).
class FitError : public Error {
 public:
  using Error::Error;
};

/// Grid too small for the requested computation (convergence check failed).
class GridError : public Error {
 public:
  using Error::Error;
};

/// File I/O failure, format mismatch, or incompatible checkpoint.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rotorlab
