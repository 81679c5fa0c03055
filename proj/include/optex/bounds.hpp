#pragma once

#include "optex/model.hpp"

namespace optex {

/// Elementwise interval bounds L <= Sigma* <= U guaranteed to contain the
/// covariance matrix of an optimal design, plus the reference criterion
/// value alpha they were scaled by. Diagonal lower bounds are zero and
/// off-diagonal bounds are symmetric around zero (L_jk = -U_jk).
struct CovBounds {
  SymMatrix lower;
  SymMatrix upper;
  double alpha;

  CovBounds(SymMatrix lower, SymMatrix upper, double alpha);
};

/// alpha = Phi_B(M(d0)); any optimal covariance matrix satisfies
/// tr(B_l' Sigma* B_l) <= alpha for every block.
double reference_alpha(const DesignProblem& problem, const CriterionSpec& spec,
                       const ExactDesign& d0);

/// N(w) = sum_l w_l B_l B_l', the information matrix of the auxiliary
/// approximate design w on the block index set.
SymMatrix nw_matrix(const CriterionSpec& spec, const ApproximateDesign& w);

/// Moore-Penrose approximate design for e_j: weights proportional to the
/// block norms of B^+ e_j; guarantees e_j lies in the column space of N(w).
ApproximateDesign mp_design(const CriterionSpec& spec, int j);

/// tr(X' Sigma X) <= alpha * lambda_max(X' N^+(w) X) for every nonnegative
/// definite Sigma with tr(B_l' Sigma B_l) <= alpha. Requires
/// C(X) within C(N(w)); violations raise ColumnSpaceViolation.
double lemma1_bound(const CriterionSpec& spec, double alpha, const ApproximateDesign& w,
                    const DenseMatrix& x);

/// Bounds of the form |c*_jk| <= sqrt(U_jj U_kk) built from per-variance
/// bounds U_tt = alpha * min(K (BB')^{-1}_tt, N^+(w^(t+))_tt).
SymMatrix type1_bounds(const CriterionSpec& spec, double alpha);

/// Off-diagonal bounds |c*_jk| <= (alpha/2) * min over the uniform and
/// Moore-Penrose pair designs of lambda_max(E_jk' N^+(w) E_jk); the diagonal
/// is filled from type1_bounds.
SymMatrix type2_bounds(const CriterionSpec& spec, double alpha);

/// Full bound assembly: alpha from the reference design, U as the
/// elementwise minimum of the Type I and Type II bounds, L_jj = 0 and
/// L_jk = -U_jk. The reference design must satisfy any extra constraints
/// that will be imposed on the optimization.
CovBounds combined_bounds(const DesignProblem& problem, const CriterionSpec& spec,
                          const ExactDesign& d0);

/// Same assembly from a precomputed alpha (used for externally supplied
/// reference values).
CovBounds combined_bounds_from_alpha(const CriterionSpec& spec, double alpha);

}  // namespace optex
