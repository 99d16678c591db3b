#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace tpbc {

struct Trajectory;
struct TrainingLog;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Attempt to evaluate the drift of a g-only system view.
class VisibilityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class UnknownBenchmark : public Error {
 public:
  using Error::Error;
};

/// State norm exceeded the integrator guard. Carries the trajectory up to
/// the offending step.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::shared_ptr<const Trajectory> partial)
      : Error(what), partial_trajectory(std::move(partial)) {}
  explicit DivergenceError(const std::string& what) : Error(what) {}

  std::shared_ptr<const Trajectory> partial_trajectory;
};

/// Requested window or time lies outside the available support.
class RangeError : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Filtered regressor stayed below the persistent-excitation floor for a
/// full reset period.
class PEViolation : public Error {
 public:
  PEViolation(const std::string& what, std::shared_ptr<const TrainingLog> log)
      : Error(what), log_so_far(std::move(log)) {}
  explicit PEViolation(const std::string& what) : Error(what) {}

  std::shared_ptr<const TrainingLog> log_so_far;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::shared_ptr<const TrainingLog> log)
      : Error(what), log_so_far(std::move(log)) {}
  explicit NonConvergence(const std::string& what) : Error(what) {}

  std::shared_ptr<const TrainingLog> log_so_far;
};

class NoStabilizingSolution : public Error {
 public:
  using Error::Error;
};

class ShootingDiverged : public Error {
 public:
  ShootingDiverged(const std::string& what, double residual)
      : Error(what), best_residual(residual) {}

  double best_residual = 0.0;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

/// Config file problem; message carries the offending key path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tpbc
