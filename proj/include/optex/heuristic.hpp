#pragma once

#include "optex/constraints.hpp"

namespace optex {

struct HeuristicConfig {
  int restarts = 10;
  unsigned long rng_seed = 0;
  int max_passes = 100;
};

/// Exchange objective trace: one inner vector per restart, starting with the
/// initial objective and followed by the value after each accepted swap.
using ExchangeTrace = std::vector<std::vector<double>>;

/// Pairwise-exchange search for a reference design d_0. Starts from random
/// feasible N-subsets with nonsingular information matrix and repeatedly
/// applies the steepest-descent swap (evaluate every in/out pair, take the
/// largest decrease, stop when no swap improves by more than 1e-12).
///
/// For the G preset the exchange runs on the log-det surrogate (the trace
/// records that surrogate); the returned design is then scored under the
/// actual criterion by the caller.
///
/// Throws NoFeasibleStart when no constraint-satisfying nonsingular design
/// is found within restarts*1000 random draws.
ExactDesign exchange_search(const DesignProblem& problem, const CriterionSpec& spec,
                            const HeuristicConfig& config,
                            const std::vector<ExtraConstraint>& extras = {},
                            ExchangeTrace* trace = nullptr);

}  // namespace optex
