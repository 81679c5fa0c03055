#include "optex/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace optex {

DesignProblem::DesignProblem(std::vector<Vector> regressors, int run_budget,
                             std::vector<std::string> labels)
    : regressors_(std::move(regressors)), run_budget_(run_budget), labels_(std::move(labels)) {
  const int n = static_cast<int>(regressors_.size());
  if (n < 1) throw SchemaError("problem has no design points");
  const int m = static_cast<int>(regressors_.front().size());
  if (m < 1) throw SchemaError("regressors must have dimension >= 1");
  for (const Vector& f : regressors_) {
    if (static_cast<int>(f.size()) != m) {
      throw DimensionMismatch("regressors have inconsistent dimensions");
    }
    if (!f.allFinite()) throw SchemaError("regressor has non-finite entries");
    if (f.norm() == 0.0) throw SchemaError("zero regressor is not allowed");
  }
  if (n < m) throw SchemaError("need at least m design points");
  if (run_budget_ < m || run_budget_ > n) {
    throw SchemaError("run budget N must satisfy m <= N <= n (got N=" +
                      std::to_string(run_budget_) + ", m=" + std::to_string(m) +
                      ", n=" + std::to_string(n) + ")");
  }
  if (regressor_matrix().colPivHouseholderQr().rank() < m) {
    throw RankDeficient("regressors do not span R^m");
  }
  if (labels_.empty()) {
    labels_.reserve(n);
    for (int i = 0; i < n; ++i) labels_.push_back(std::to_string(i + 1));
  } else if (static_cast<int>(labels_.size()) != n) {
    throw SchemaError("label count differs from the number of design points");
  }
}

DenseMatrix DesignProblem::regressor_matrix() const {
  DenseMatrix f(dimension(), num_points());
  for (int i = 0; i < num_points(); ++i) f.col(i) = regressors_[i];
  return f;
}

std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::A: return "A";
    case CriterionKind::I: return "I";
    case CriterionKind::MV: return "MV";
    case CriterionKind::G: return "G";
    case CriterionKind::Custom: return "custom";
  }
  return "?";
}

CriterionSpec::CriterionSpec(std::vector<DenseMatrix> blocks, CriterionKind kind)
    : blocks_(std::move(blocks)), kind_(kind) {
  if (blocks_.empty()) throw SchemaError("criterion needs at least one block");
  const int m = static_cast<int>(blocks_.front().rows());
  long total_cols = 0;
  for (const DenseMatrix& b : blocks_) {
    if (b.rows() != m) throw DimensionMismatch("criterion blocks have inconsistent row counts");
    if (b.cols() < 1) throw SchemaError("criterion block has no columns");
    if (!b.allFinite()) throw SchemaError("criterion block has non-finite entries");
    for (int c = 0; c < b.cols(); ++c) {
      if (b.col(c).norm() == 0.0) throw SchemaError("criterion block has a zero column");
    }
    total_cols += b.cols();
  }
  DenseMatrix cat(m, total_cols);
  long at = 0;
  for (const DenseMatrix& b : blocks_) {
    cat.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  if (cat.colPivHouseholderQr().rank() < m) {
    throw RankDeficient("concatenated criterion blocks do not have full row rank");
  }
}

CriterionSpec CriterionSpec::preset(CriterionKind kind, const DesignProblem& problem) {
  const int m = problem.dimension();
  std::vector<DenseMatrix> blocks;
  switch (kind) {
    case CriterionKind::A:
      blocks.push_back(DenseMatrix::Identity(m, m));
      break;
    case CriterionKind::I:
      blocks.push_back(problem.regressor_matrix());
      break;
    case CriterionKind::MV:
      for (int l = 0; l < m; ++l) {
        DenseMatrix e = DenseMatrix::Zero(m, 1);
        e(l, 0) = 1.0;
        blocks.push_back(e);
      }
      break;
    case CriterionKind::G:
      for (int i = 0; i < problem.num_points(); ++i) {
        blocks.push_back(problem.regressor(i));
      }
      break;
    case CriterionKind::Custom:
      throw SchemaError("custom criterion requires explicit blocks");
  }
  return CriterionSpec(std::move(blocks), kind);
}

DenseMatrix CriterionSpec::concat() const {
  long total_cols = 0;
  for (const DenseMatrix& b : blocks_) total_cols += b.cols();
  DenseMatrix cat(dimension(), total_cols);
  long at = 0;
  for (const DenseMatrix& b : blocks_) {
    cat.middleCols(at, b.cols()) = b;
    at += b.cols();
  }
  return cat;
}

ExactDesign::ExactDesign(std::vector<int> counts, int run_budget) : counts_(std::move(counts)) {
  long total = 0;
  for (int c : counts_) {
    if (c < 0) throw SchemaError("design counts must be nonnegative");
    total += c;
  }
  if (total != run_budget) {
    throw SchemaError("design counts sum to " + std::to_string(total) + ", expected " +
                      std::to_string(run_budget));
  }
}

bool ExactDesign::is_binary() const {
  for (int c : counts_) {
    if (c > 1) return false;
  }
  return true;
}

std::vector<int> ExactDesign::support() const {
  std::vector<int> s;
  for (int i = 0; i < num_points(); ++i) {
    if (counts_[i] > 0) s.push_back(i);
  }
  return s;
}

ApproximateDesign::ApproximateDesign(std::vector<double> weights)
    : weights_(std::move(weights)) {
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw SchemaError("approximate design weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw SchemaError("approximate design weights must sum to 1 (got " + std::to_string(total) +
                      ")");
  }
}

SymMatrix info_matrix(const DesignProblem& problem, const ExactDesign& design) {
  if (design.num_points() != problem.num_points()) {
    throw DimensionMismatch("design length differs from the number of design points");
  }
  const int m = problem.dimension();
  DenseMatrix acc = DenseMatrix::Zero(m, m);
  for (int i = 0; i < problem.num_points(); ++i) {
    const int d = design.count(i);
    if (d > 0) {
      acc.noalias() += d * (problem.regressor(i) * problem.regressor(i).transpose());
    }
  }
  return SymMatrix(acc);
}

bool is_nonsingular(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.mat(), Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  return es.eigenvalues().minCoeff() > 1e-10 * lmax;
}

double criterion_value(const CriterionSpec& spec, const SymMatrix& m) {
  if (spec.dimension() != m.size()) {
    throw DimensionMismatch("criterion/matrix dimensions differ");
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.mat());
  const Vector& ev = es.eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  if (!(ev.minCoeff() > 1e-10 * lmax)) {
    throw SingularInformation("information matrix is numerically singular");
  }
  DenseMatrix inv =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  double best = -std::numeric_limits<double>::infinity();
  for (const DenseMatrix& b : spec.blocks()) {
    best = std::max(best, (b.transpose() * inv * b).trace());
  }
  return best;
}

double psi_value(const CriterionSpec& spec, const SymMatrix& sigma) {
  if (spec.dimension() != sigma.size()) {
    throw DimensionMismatch("criterion/matrix dimensions differ");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const DenseMatrix& b : spec.blocks()) {
    best = std::max(best, (b.transpose() * sigma.mat() * b).trace());
  }
  return best;
}

DesignProblem localize_nonlinear(const MeanFunction& mean_function, const Vector& beta0,
                                 const std::vector<Vector>& points, int run_budget, double step,
                                 std::vector<std::string> labels) {
  if (!(step > 0.0)) throw SchemaError("finite-difference step must be positive");
  const int m = static_cast<int>(beta0.size());
  std::vector<Vector> regressors;
  regressors.reserve(points.size());
  for (const Vector& x : points) {
    Vector grad(m);
    for (int j = 0; j < m; ++j) {
      const double h = step * (1.0 + std::abs(beta0(j)));
      Vector bp = beta0, bm = beta0;
      bp(j) += h;
      bm(j) -= h;
      grad(j) = (mean_function(x, bp) - mean_function(x, bm)) / (2.0 * h);
    }
    regressors.push_back(grad);
  }
  try {
    return DesignProblem(std::move(regressors), run_budget, std::move(labels));
  } catch (const RankDeficient&) {
    throw RankDeficient("localized regressors do not span R^m");
  }
}

}  // namespace optex
