#pragma once

#include <pnkrylov/trace.hpp>

#include <string>
#include <vector>

namespace pnk {

enum class SolveStatus {
  converged,            // the configured stopping rule fired
  stopped_by_callback,  // a user predicate ended the run
  max_iterations,
  budget_exhausted,  // matvec budget reached
  line_search_failure,
  singular_jacobian,
  singular_system,
};

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::stopped_by_callback: return "stopped-by-callback";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::budget_exhausted: return "budget-exhausted";
    case SolveStatus::line_search_failure: return "line-search-failure";
    case SolveStatus::singular_jacobian: return "singular-jacobian";
    case SolveStatus::singular_system: return "singular-system";
  }
  return "unknown";
}

inline bool is_failure(SolveStatus s) {
  return s == SolveStatus::line_search_failure || s == SolveStatus::singular_jacobian ||
         s == SolveStatus::singular_system;
}

/// Outcome of any of the solvers. For the fixed-α reference solvers `lambda` holds 1/α.
struct SolveResult {
  std::string method;
  SolveStatus status = SolveStatus::max_iterations;
  bool subspace_converged = false;  // the basis stopped growing before the run ended
  std::string message;
  Vector x;
  Vector y;
  double lambda = kNotAvailable;
  Index iterations = 0;
  std::vector<TraceRow> trace;

  bool failed() const { return is_failure(status); }
  double alpha() const { return 1.0 / lambda; }
};

}  // namespace pnk
