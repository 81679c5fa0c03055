#include "optex/bounds.hpp"

#include <cmath>

namespace optex {

CovBounds::CovBounds(SymMatrix lower_in, SymMatrix upper_in, double alpha_in)
    : lower(std::move(lower_in)), upper(std::move(upper_in)), alpha(alpha_in) {
  if (lower.size() != upper.size()) throw DimensionMismatch("bound matrices differ in size");
  const int m = lower.size();
  for (int j = 0; j < m; ++j) {
    if (lower(j, j) != 0.0) throw SchemaError("diagonal lower covariance bounds must be zero");
    for (int k = 0; k < m; ++k) {
      if (!std::isfinite(lower(j, k)) || !std::isfinite(upper(j, k))) {
        throw InfiniteBound("covariance bounds must be finite");
      }
      if (lower(j, k) > upper(j, k)) throw SchemaError("covariance bounds must satisfy L <= U");
      if (j != k && lower(j, k) != -upper(j, k)) {
        throw SchemaError("off-diagonal covariance bounds must be symmetric around zero");
      }
    }
  }
}

double reference_alpha(const DesignProblem& problem, const CriterionSpec& spec,
                       const ExactDesign& d0) {
  return criterion_value(spec, info_matrix(problem, d0));
}

SymMatrix nw_matrix(const CriterionSpec& spec, const ApproximateDesign& w) {
  if (w.size() != spec.num_blocks()) {
    throw DimensionMismatch("approximate design length differs from the block count");
  }
  const int m = spec.dimension();
  DenseMatrix acc = DenseMatrix::Zero(m, m);
  for (int l = 0; l < spec.num_blocks(); ++l) {
    if (w.weight(l) > 0.0) {
      acc.noalias() += w.weight(l) * (spec.block(l) * spec.block(l).transpose());
    }
  }
  return SymMatrix(0.5 * (acc + acc.transpose()));
}

ApproximateDesign mp_design(const CriterionSpec& spec, int j) {
  const int m = spec.dimension();
  if (j < 0 || j >= m) throw DimensionMismatch("mp_design index out of range");
  Vector ej = Vector::Zero(m);
  ej(j) = 1.0;
  const Vector h = pinv(spec.concat()) * ej;
  std::vector<double> weights(spec.num_blocks());
  double total = 0.0;
  long at = 0;
  for (int l = 0; l < spec.num_blocks(); ++l) {
    const long s = spec.block(l).cols();
    weights[l] = h.segment(at, s).norm();
    total += weights[l];
    at += s;
  }
  // S_j > 0 because e_j lies in C(B) (full row rank).
  for (double& v : weights) v /= total;
  return ApproximateDesign(std::move(weights));
}

double lemma1_bound(const CriterionSpec& spec, double alpha, const ApproximateDesign& w,
                    const DenseMatrix& x) {
  SymMatrix nw = nw_matrix(spec, w);
  if (!column_space_contains(nw, x)) {
    throw ColumnSpaceViolation("C(X) is not contained in C(N(w))");
  }
  SymMatrix np = pinv_sym(nw);
  DenseMatrix inner = x.transpose() * np.mat() * x;
  return alpha * max_eig(SymMatrix(0.5 * (inner + inner.transpose())));
}

namespace {

ApproximateDesign pair_design(const ApproximateDesign& a, const ApproximateDesign& b) {
  std::vector<double> w(a.size());
  for (int l = 0; l < a.size(); ++l) w[l] = 0.5 * (a.weight(l) + b.weight(l));
  return ApproximateDesign(std::move(w));
}

DenseMatrix pair_matrix(int m, int j, int k) {
  DenseMatrix e = DenseMatrix::Zero(m, 2);
  e(j, 0) = 1.0;
  e(k, 1) = 1.0;
  return e;
}

}  // namespace

SymMatrix type1_bounds(const CriterionSpec& spec, double alpha) {
  const int m = spec.dimension();
  const int k_blocks = spec.num_blocks();
  const DenseMatrix b = spec.concat();
  const SymMatrix bbt_inv = invert(SymMatrix(b * b.transpose()));

  // Per-variance bounds; the elementwise minimum over both auxiliary design
  // families is valid because each family bounds c*_tt on its own.
  Vector diag(m);
  for (int t = 0; t < m; ++t) {
    const double uniform = alpha * k_blocks * bbt_inv(t, t);
    const SymMatrix np = pinv_sym(nw_matrix(spec, mp_design(spec, t)));
    const double moore_penrose = alpha * np(t, t);
    diag(t) = std::min(uniform, moore_penrose);
  }

  DenseMatrix u(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      u(j, k) = (j == k) ? diag(j) : std::sqrt(diag(j) * diag(k));
    }
  }
  return SymMatrix(0.5 * (u + u.transpose()));
}

SymMatrix type2_bounds(const CriterionSpec& spec, double alpha) {
  const int m = spec.dimension();
  const int k_blocks = spec.num_blocks();
  const DenseMatrix b = spec.concat();
  const SymMatrix bbt_inv = invert(SymMatrix(b * b.transpose()));
  const SymMatrix t1 = type1_bounds(spec, alpha);

  std::vector<ApproximateDesign> mp;
  mp.reserve(m);
  for (int t = 0; t < m; ++t) mp.push_back(mp_design(spec, t));

  DenseMatrix u(m, m);
  for (int j = 0; j < m; ++j) {
    u(j, j) = t1(j, j);
    for (int k = j + 1; k < m; ++k) {
      const DenseMatrix e = pair_matrix(m, j, k);
      DenseMatrix g = e.transpose() * bbt_inv.mat() * e;
      const double uniform = 0.5 * alpha * k_blocks * max_eig(SymMatrix(0.5 * (g + g.transpose())));
      const SymMatrix np = pinv_sym(nw_matrix(spec, pair_design(mp[j], mp[k])));
      DenseMatrix h = e.transpose() * np.mat() * e;
      const double moore_penrose = 0.5 * alpha * max_eig(SymMatrix(0.5 * (h + h.transpose())));
      u(j, k) = u(k, j) = std::min(uniform, moore_penrose);
    }
  }
  return SymMatrix(u);
}

CovBounds combined_bounds_from_alpha(const CriterionSpec& spec, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw SchemaError("reference criterion value must be positive and finite");
  }
  const int m = spec.dimension();
  const SymMatrix t1 = type1_bounds(spec, alpha);
  const SymMatrix t2 = type2_bounds(spec, alpha);
  DenseMatrix upper(m, m), lower(m, m);
  for (int j = 0; j < m; ++j) {
    upper(j, j) = t1(j, j);
    lower(j, j) = 0.0;
    for (int k = j + 1; k < m; ++k) {
      upper(j, k) = upper(k, j) = std::min(t1(j, k), t2(j, k));
      lower(j, k) = lower(k, j) = -upper(j, k);
    }
  }
  return CovBounds(SymMatrix(lower), SymMatrix(upper), alpha);
}

CovBounds combined_bounds(const DesignProblem& problem, const CriterionSpec& spec,
                          const ExactDesign& d0) {
  return combined_bounds_from_alpha(spec, reference_alpha(problem, spec, d0));
}

}  // namespace optex
