#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wildrefit/linalg.hpp"

namespace wildrefit {

// Rejected input: domain violations, shape mismatches, out-of-range parameters.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative solver stopped without meeting its stationarity tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Vector last_iterate, double gradient_norm,
                   std::vector<double> objective_trace = {})
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        gradient_norm_(gradient_norm),
        objective_trace_(std::move(objective_trace)) {}

  const Vector& last_iterate() const noexcept { return last_iterate_; }
  double gradient_norm() const noexcept { return gradient_norm_; }
  const std::vector<double>& objective_trace() const noexcept { return objective_trace_; }

 private:
  Vector last_iterate_;
  double gradient_norm_;
  std::vector<double> objective_trace_;
};

struct TracePoint {
  double argument;
  double value;
};

// Bracketing / grid searches that failed; carries every evaluated point.
class SearchError : public std::runtime_error {
 public:
  SearchError(const std::string& what, std::vector<TracePoint> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TracePoint>& trace() const noexcept { return trace_; }

 private:
  std::vector<TracePoint> trace_;
};

class CalibrationError : public SearchError {
 public:
  using SearchError::SearchError;
};

class UnboundedRadiusError : public SearchError {
 public:
  using SearchError::SearchError;
};

// Trainer failure annotated with the pipeline stage that invoked it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace wildrefit
