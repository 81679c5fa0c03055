#pragma once

#include <optional>

#include "optex/constraints.hpp"

namespace optex {

struct OracleResult {
  ExactDesign best;
  double best_value = 0.0;
  long examined = 0;            // designs surviving the constraint filter
  long constraint_rejected = 0;
  long singular_rejected = 0;
};

struct OracleConfig {
  long max_designs = 5'000'000;  // cap on the enumeration count; TooLarge above
};

/// Number of count vectors d with sum N, 0 <= d_i <= caps_i (caps default 1).
long count_designs(int n, int budget, const std::vector<int>& caps);

/// Ground-truth solver: complete enumeration of all designs of size N,
/// binary by default or capped replication counts when caps are given.
/// Returns the global minimizer of the criterion among feasible designs with
/// nonsingular information matrix; ties break to the lexicographically
/// smallest count vector.
OracleResult enumerate_best(const DesignProblem& problem, const CriterionSpec& spec,
                            const std::vector<ExtraConstraint>& extras = {},
                            const std::vector<int>& caps = {},
                            const OracleConfig& config = {});

}  // namespace optex
