#pragma once

#include "optex/milp.hpp"

namespace optex {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> primal;  // structural variables only
  long pivots = 0;
};

struct LpOptions {
  double pivot_tol = 1e-9;
  double feas_tol = 1e-7;
  long iteration_limit_factor = 50;  // limit = factor * (rows + cols) + 1000
  int bland_after_degenerate = 200;
  bool bland_from_start = false;  // deterministic alternative pivot order
};

/// Reusable dense-tableau storage so branch-and-bound nodes do not
/// reallocate tens of megabytes per solve.
struct LpWorkspace {
  DenseMatrix tableau;
  std::vector<double> xb;
  std::vector<int> basis;
};

/// Solves the LP relaxation of the model (integrality ignored) with an
/// optional partial assignment of variables, via a bounded-variable
/// two-phase primal simplex on a dense tableau. Dantzig pricing with a
/// switch to Bland's rule after a degenerate streak. Raises IterationLimit
/// when the pivot budget is exhausted.
LpSolution solve_lp(const MilpModel& model,
                    const std::vector<std::pair<int, double>>& var_fixings = {},
                    const LpOptions& options = {}, LpWorkspace* workspace = nullptr);

}  // namespace optex
