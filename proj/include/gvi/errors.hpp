#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gvi {

// Base class for everything thrown by this library. The CLI maps ConfigError
// to exit code 2 and any other Error (plus solver non-convergence and contract
// violations) to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A density or density-like quantity was requested for a point mass.
struct DegenerateMeasureError : Error {
  using Error::Error;
};

// A divergence was asked to compare measures it cannot (e.g. KL between a
// point mass and a non-atomic measure, which is infinite).
struct DegenerateInputError : Error {
  using Error::Error;
};

// Operands live on different representations (continuous vs. grid) and the
// requested operation has no meaningful value across that boundary.
struct MixedTrackError : Error {
  using Error::Error;
};

// Two grid-based operands were expected to share a grid and do not.
struct GridMismatchError : Error {
  using Error::Error;
};

// A quadrature failed to converge or the integrand is not integrable.
struct NonIntegrableError : Error {
  using Error::Error;
};

// The numerical probe for a divergence-generator bound neither settled on a
// finite value nor showed clear divergence within its evaluation budget.
struct InconclusiveBoundError : Error {
  using Error::Error;
};

// An operation that needs observations received an empty dataset.
struct EmptyDataError : Error {
  using Error::Error;
};

// An infimum over an empty restriction set was requested.
struct EmptySetError : Error {
  using Error::Error;
};

// A region or membership query needs a finite divergence bound and the
// configured divergence has none.
struct UnboundedDivergenceError : Error {
  using Error::Error;
};

// A candidate measure does not belong to the variational family of a problem.
struct FamilyClosureError : Error {
  using Error::Error;
};

// The configured (M(n), beta(n), eps_n) schedules violate the growth
// conditions required for a rate experiment to be meaningful.
struct ScheduleViolationError : Error {
  using Error::Error;
};

// A documented precondition of an experiment was violated by its inputs.
struct PreconditionError : Error {
  using Error::Error;
};

// No member of the variational family has finite objective.
struct InfeasibleProblemError : Error {
  using Error::Error;
};

// File I/O failure; the message always carries the offending path.
struct IoError : Error {
  using Error::Error;
};

// Invalid or inconsistent configuration. Aggregates all problems found.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what, std::vector<std::string> issues = {})
      : Error(what), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

}  // namespace gvi
