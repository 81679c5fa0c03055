#pragma once

#include <Eigen/Dense>

#include "optex/errors.hpp"

namespace optex {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric real matrix. Construction rejects inputs whose asymmetry
/// exceeds 1e-12 and stores the symmetrized part, so downstream code can
/// rely on exact a_jk == a_kj.
class SymMatrix {
 public:
  explicit SymMatrix(const DenseMatrix& a);

  static SymMatrix identity(int m);
  static SymMatrix zero(int m);

  int size() const { return static_cast<int>(mat_.rows()); }
  double operator()(int j, int k) const { return mat_(j, k); }
  const DenseMatrix& mat() const { return mat_; }

 private:
  DenseMatrix mat_;
};

/// Inverse of a positive definite matrix. The definiteness test is
/// lambda_min > 1e-10 * lambda_max; failures raise SingularMatrix.
SymMatrix invert(const SymMatrix& m);

/// Moore-Penrose pseudoinverse of an arbitrary real matrix,
/// via SVD with singular values below 1e-12 * sigma_max treated as zero.
DenseMatrix pinv(const DenseMatrix& a);

/// Pseudoinverse specialized to symmetric matrices (eigendecomposition,
/// same relative cutoff). Returns a symmetric result.
SymMatrix pinv_sym(const SymMatrix& m);

/// Largest eigenvalue of a symmetric matrix.
double max_eig(const SymMatrix& m);

/// Smallest eigenvalue of a symmetric matrix.
double min_eig(const SymMatrix& m);

/// True iff C(X) is contained in C(M), tested as
/// ||(M M^+ - I) X||_F <= 1e-8 ||X||_F.
bool column_space_contains(const SymMatrix& m, const DenseMatrix& x);

}  // namespace optex
