#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace coact {

/// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller-side mistakes: malformed input, overlapping sets, unknown names.
class UsageError : public Error {
public:
  using Error::Error;
};

/// A level or context that is not part of a variable's domain.
class DomainError : public UsageError {
public:
  using UsageError::UsageError;
};

/// Analysis could not proceed on the data it was given.
class AnalysisError : public Error {
public:
  using Error::Error;
};

/// A dichotomization block (or its complement) is empty or has zero mass.
class DegenerateError : public AnalysisError {
public:
  using AnalysisError::AnalysisError;
};

/// A risk-table cell could not be estimated.
class EstimationError : public AnalysisError {
public:
  using AnalysisError::AnalysisError;
};

/// Maximum-likelihood fitting failed; carries the objective trace.
class FitError : public AnalysisError {
public:
  FitError(const std::string& what, std::vector<double> trace = {})
      : AnalysisError(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

private:
  std::vector<double> trace_;
};

class BootstrapError : public AnalysisError {
public:
  using AnalysisError::AnalysisError;
};

}  // namespace coact
