#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "optex/linalg.hpp"

namespace optex {

/// A finite design space: n candidate regressors in R^m plus the run budget N.
/// The regressor stack must have rank m, no regressor may be zero, and
/// m <= N <= n must hold (binary-design regime).
class DesignProblem {
 public:
  DesignProblem(std::vector<Vector> regressors, int run_budget,
                std::vector<std::string> labels = {});

  int num_points() const { return static_cast<int>(regressors_.size()); }
  int dimension() const { return static_cast<int>(regressors_.front().size()); }
  int run_budget() const { return run_budget_; }
  const Vector& regressor(int i) const { return regressors_[i]; }
  const std::vector<Vector>& regressors() const { return regressors_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int i) const { return labels_[i]; }

  /// F = (f_1, ..., f_n), the m x n regressor matrix.
  DenseMatrix regressor_matrix() const;

 private:
  std::vector<Vector> regressors_;
  int run_budget_;
  std::vector<std::string> labels_;
};

enum class CriterionKind { A, I, MV, G, Custom };

std::string to_string(CriterionKind kind);

/// The block sequence B_1..B_K defining the minimax criterion
/// max_l tr(B_l' M^{-1} B_l). The concatenation B = (B_1,...,B_K) must have
/// full row rank and no zero column.
class CriterionSpec {
 public:
  CriterionSpec(std::vector<DenseMatrix> blocks, CriterionKind kind = CriterionKind::Custom);

  /// Presets: A -> K=1, B_1 = I_m.  I -> K=1, B_1 = F.
  ///          MV -> K=m, B_l = e_l.  G -> K=n, B_l = f_l.
  static CriterionSpec preset(CriterionKind kind, const DesignProblem& problem);

  CriterionKind kind() const { return kind_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const DenseMatrix& block(int l) const { return blocks_[l]; }
  const std::vector<DenseMatrix>& blocks() const { return blocks_; }
  int dimension() const { return static_cast<int>(blocks_.front().rows()); }

  /// The concatenated m x (sum s_l) matrix B.
  DenseMatrix concat() const;

 private:
  std::vector<DenseMatrix> blocks_;
  CriterionKind kind_;
};

/// Replication counts per design point, summing to the run budget.
class ExactDesign {
 public:
  ExactDesign(std::vector<int> counts, int run_budget);

  int num_points() const { return static_cast<int>(counts_.size()); }
  int count(int i) const { return counts_[i]; }
  const std::vector<int>& counts() const { return counts_; }
  bool is_binary() const;
  std::vector<int> support() const;

 private:
  std::vector<int> counts_;
};

/// Nonnegative weights summing to one; auxiliary device for bound building.
class ApproximateDesign {
 public:
  explicit ApproximateDesign(std::vector<double> weights);

  int size() const { return static_cast<int>(weights_.size()); }
  double weight(int l) const { return weights_[l]; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// M(d) = sum_i d_i f_i f_i'.
SymMatrix info_matrix(const DesignProblem& problem, const ExactDesign& design);

/// True iff lambda_min(M) > 1e-10 * lambda_max(M).
bool is_nonsingular(const SymMatrix& m);

/// Phi_B(M) = max_l tr(B_l' M^{-1} B_l). Throws SingularInformation when M
/// fails the relative-eigenvalue definiteness test.
double criterion_value(const CriterionSpec& spec, const SymMatrix& m);

/// Psi_B(Sigma) = max_l tr(B_l' Sigma B_l), defined on all of S^m.
double psi_value(const CriterionSpec& spec, const SymMatrix& sigma);

using MeanFunction = std::function<double(const Vector& point, const Vector& beta)>;

/// Local linearization of a nonlinear mean function: regressor i is the
/// central finite-difference gradient of h(x_i, .) at beta0, with per-axis
/// step step * (1 + |beta0_j|). Throws RankDeficient when the localized
/// regressors do not span R^m.
DesignProblem localize_nonlinear(const MeanFunction& mean_function, const Vector& beta0,
                                 const std::vector<Vector>& points, int run_budget,
                                 double step = 1e-6,
                                 std::vector<std::string> labels = {});

}  // namespace optex
