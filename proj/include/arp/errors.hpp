#pragma once

#include <stdexcept>
#include <string>

namespace arp {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Oracle produced a non-finite value or tensor entry.
struct EvaluationError : SolverError {
  using SolverError::SolverError;
};

// Subproblem solver could not find a strictly decreasing feasible step.
struct NoDescent : SolverError {
  using SolverError::SolverError;
};

// Subproblem solver exhausted its iteration budget before the termination
// test held.
struct InnerBudgetExceeded : SolverError {
  using SolverError::SolverError;
};

// A phase minimization exhausted its outer iteration budget.
struct PhaseBudgetExceeded : SolverError {
  using SolverError::SolverError;
};

// Phase 2 exhausted its target budget.
struct MaxTargetsExceeded : SolverError {
  using SolverError::SolverError;
};

}  // namespace arp
