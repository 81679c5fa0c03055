#pragma once

#include <optional>
#include <string>

#include "optex/bounds.hpp"
#include "optex/constraints.hpp"
#include "optex/enumerate.hpp"
#include "optex/solver.hpp"

namespace optex {

/// Problem files: {"regressors": [[...], ...], "N": int, "labels": [...]?}.
/// All user-facing indices (labels aside) are 1-based.
DesignProblem load_problem(const std::string& path, std::optional<int> budget_override = {});

/// Criterion from a preset tag ("A", "I", "MV", "G") or a JSON block file
/// {"blocks": [[[...], ...], ...]} of m x s_l matrices (row-major).
CriterionSpec load_criterion(const std::string& tag_or_path, const DesignProblem& problem);

/// Constraint files: a JSON list of objects with "kind" equal to
/// "design_linear" ({"points", "coeffs", "sense", "rhs"}),
/// "covariance_linear" ({"entries": [[j, k], ...], "coeffs", "sense",
/// "rhs"}), "augmentation" ({"point", "trials"}), or "criterion_limit"
/// ({"criterion", "limit"}) which expands to the covariance rows bounding
/// that criterion's value.
std::vector<ExtraConstraint> load_constraints(const std::string& path,
                                              const DesignProblem& problem);

/// Bounds-override files: {"L": [[...]], "U": [[...]], "alpha"?: number}.
/// Matrices must be symmetric with L <= U, zero diagonal in L and
/// L_jk = -U_jk off the diagonal.
CovBounds load_bounds_override(const std::string& path, double fallback_alpha);

/// Parses "1,9,16,24,31" (1-based design-point indices, repetition allowed)
/// into replication counts.
ExactDesign parse_design_list(const std::string& csv, const DesignProblem& problem);

/// Caps: either an integer literal (uniform cap) or a path to a JSON list.
std::vector<int> load_caps(const std::string& value, const DesignProblem& problem);

std::string result_to_json(const SolveResult& result, const DesignProblem& problem,
                           const std::string& criterion_name, unsigned long seed);
std::string result_to_tsv(const SolveResult& result, const DesignProblem& problem);
std::string bounds_to_json(const CovBounds& bounds, const ExactDesign& d0_folded);
std::string oracle_to_json(const OracleResult& result, const DesignProblem& problem);
std::string heuristic_to_json(const ExactDesign& d0, double alpha,
                              const DesignProblem& problem);

}  // namespace optex
