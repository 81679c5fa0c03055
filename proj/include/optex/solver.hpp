#pragma once

#include "optex/milp.hpp"
#include "optex/simplex.hpp"

namespace optex {

enum class SolveStatus { Certified, TimeLimit, Infeasible };

std::string to_string(SolveStatus s);

struct SolveResult {
  ExactDesign design;      // folded to original points when replications are in play
  double criterion_value = 0.0;
  SymMatrix sigma;
  SolveStatus status = SolveStatus::Infeasible;
  long nodes_explored = 0;
  double gap = 0.0;
  long lp_pivots = 0;
  double wall_time_sec = 0.0;
};

struct SolveLimits {
  double time_limit_sec = std::numeric_limits<double>::infinity();
  long node_limit = std::numeric_limits<long>::max();
  int threads = 1;
};

/// Everything branch-and-bound needs: the binary-mode problem the model was
/// assembled on, the criterion, bounds, translated constraints, the model
/// itself and (for replicated runs) the expansion map whose copy groups the
/// search exploits.
struct MilpContext {
  DesignProblem problem;  // binary-mode (expanded when replicated)
  CriterionSpec spec;
  CovBounds bounds;
  std::vector<ExtraConstraint> extras;           // in expanded indices
  std::vector<ExtraConstraint> extras_original;  // in original indices
  MilpModel model;
  std::optional<ExpandedProblem> expansion;
};

/// Binary-mode context: model built directly on the problem.
MilpContext make_context(const DesignProblem& problem, const CriterionSpec& spec,
                         const CovBounds& bounds, std::vector<ExtraConstraint> extras = {});

/// Replicated context: points expanded to min(N_i, N) binary copies,
/// constraints translated onto the copies.
MilpContext make_context_replicated(const DesignProblem& problem, const std::vector<int>& caps,
                                    const CriterionSpec& spec, const CovBounds& bounds,
                                    std::vector<ExtraConstraint> extras = {});

/// Most-fractional design variable of an LP relaxation solution, ties to the
/// lowest index; empty when every design variable is within 1e-6 of an
/// integer.
std::optional<int> branching_choice(const LpSolution& lp, const MilpModel& model);

/// LP relaxation of a branch-and-bound node described by per-group bounds
/// on the trial counts. Built in the reduced space of undecided groups; its
/// value equals the LP of the full model under the corresponding copy
/// fixings.
struct NodeRelaxation {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> totals;      // per group
  std::vector<double> covariance;  // c slice, column-major, when optimal
  long pivots = 0;
};

NodeRelaxation solve_node_relaxation(const MilpContext& context, const std::vector<int>& lo,
                                     const std::vector<int>& hi,
                                     LpWorkspace* workspace = nullptr);

/// The reduced model behind solve_node_relaxation; free_groups_out receives
/// the group index behind each design-variable slot.
MilpModel node_relaxation_model(const MilpContext& context, const std::vector<int>& lo,
                                const std::vector<int>& hi,
                                std::vector<int>* free_groups_out = nullptr);

/// Exact 0/1 branch-and-bound over the design variables, warm-started by an
/// optional incumbent (it must be feasible). Best-bound node selection with
/// depth-first tie-break; down-branches explored first. Status Certified
/// means the returned design is optimal within a 1e-6 relative gap.
SolveResult solve(const MilpContext& context, const std::optional<ExactDesign>& incumbent,
                  const SolveLimits& limits = {});

}  // namespace optex
