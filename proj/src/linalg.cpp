#include "optex/linalg.hpp"

#include <cmath>

namespace optex {

SymMatrix::SymMatrix(const DenseMatrix& a) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw DimensionMismatch("SymMatrix requires a square matrix");
  }
  // Entrywise check so that identical non-finite entries still count as
  // symmetric (callers validate finiteness where it matters).
  double scale = 1.0;
  for (int j = 0; j < a.rows(); ++j) {
    for (int k = 0; k < a.cols(); ++k) {
      if (std::isfinite(a(j, k))) scale = std::max(scale, std::abs(a(j, k)));
    }
  }
  for (int j = 0; j < a.rows(); ++j) {
    for (int k = j + 1; k < a.cols(); ++k) {
      const double x = a(j, k), y = a(k, j);
      const bool same = x == y || (std::isnan(x) && std::isnan(y));
      if (!same && !(std::abs(x - y) < 1e-12 * scale)) {
        throw DimensionMismatch("matrix is not symmetric at (" + std::to_string(j) + "," +
                                std::to_string(k) + ")");
      }
    }
  }
  mat_ = a;
  for (int j = 0; j < a.rows(); ++j) {
    for (int k = j + 1; k < a.cols(); ++k) {
      if (std::isfinite(a(j, k)) && std::isfinite(a(k, j))) {
        const double avg = 0.5 * (a(j, k) + a(k, j));
        mat_(j, k) = avg;
        mat_(k, j) = avg;
      }
    }
  }
}

SymMatrix SymMatrix::identity(int m) { return SymMatrix(DenseMatrix::Identity(m, m)); }

SymMatrix SymMatrix::zero(int m) { return SymMatrix(DenseMatrix::Zero(m, m)); }

SymMatrix invert(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.mat());
  const Vector& ev = es.eigenvalues();
  const double lmax = ev.cwiseAbs().maxCoeff();
  const double lmin = ev.minCoeff();
  if (!(lmin > 1e-10 * lmax)) {
    throw SingularMatrix("matrix is not positive definite (lambda_min=" +
                         std::to_string(lmin) + ", lambda_max=" + std::to_string(lmax) + ")");
  }
  DenseMatrix inv =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return SymMatrix(0.5 * (inv + inv.transpose()));
}

DenseMatrix pinv(const DenseMatrix& a) {
  Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0) return DenseMatrix::Zero(a.cols(), a.rows());
  const double cutoff = 1e-12 * sv(0);
  Vector inv_sv = Vector::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

SymMatrix pinv_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.mat());
  const Vector& ev = es.eigenvalues();
  const double cutoff = 1e-12 * ev.cwiseAbs().maxCoeff();
  Vector inv_ev = Vector::Zero(ev.size());
  for (int i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > cutoff) inv_ev(i) = 1.0 / ev(i);
  }
  DenseMatrix p = es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
  return SymMatrix(0.5 * (p + p.transpose()));
}

double max_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.mat(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool column_space_contains(const SymMatrix& m, const DenseMatrix& x) {
  if (m.size() != x.rows()) {
    throw DimensionMismatch("column_space_contains: row counts differ");
  }
  const double xnorm = x.norm();
  if (xnorm == 0.0) return true;
  SymMatrix mp = pinv_sym(m);
  DenseMatrix residual = m.mat() * mp.mat() * x - x;
  return residual.norm() <= 1e-8 * xnorm;
}

}  // namespace optex
