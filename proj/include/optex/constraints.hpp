#pragma once

#include <utility>
#include <vector>

#include "optex/model.hpp"

namespace optex {

enum class Sense { LE, GE, EQ };

std::string to_string(Sense s);

/// A user constraint beyond the cardinality row. Three kinds:
///  - DesignLinear: sum coeffs[t] * d[indices[t]]  (sense)  rhs
///  - CovarianceLinear: sum coeffs[t] * Sigma(entries[t])  (sense)  rhs
///  - Augmentation: d[indices[0]] >= rhs trials already performed.
struct ExtraConstraint {
  enum class Kind { DesignLinear, CovarianceLinear, Augmentation };

  Kind kind = Kind::DesignLinear;
  std::vector<int> indices;                    // design-point indices (0-based)
  std::vector<std::pair<int, int>> entries;    // covariance coordinates (0-based)
  std::vector<double> coeffs;
  Sense sense = Sense::LE;
  double rhs = 0.0;

  static ExtraConstraint design_linear(std::vector<int> indices, std::vector<double> coeffs,
                                       Sense sense, double rhs);
  static ExtraConstraint covariance_linear(std::vector<std::pair<int, int>> entries,
                                           std::vector<double> coeffs, Sense sense, double rhs);
  static ExtraConstraint augmentation(int point, int performed_trials);

  void validate(int num_points, int dimension) const;
};

bool sense_holds(Sense sense, double lhs, double rhs, double tol);

double design_row_value(const ExtraConstraint& c, const std::vector<int>& counts);
double covariance_row_value(const ExtraConstraint& c, const SymMatrix& sigma);

/// Checks every constraint against an integer design and its covariance
/// matrix (sigma may be null when no covariance rows are present).
bool satisfies_constraints(const std::vector<ExtraConstraint>& extras,
                           const std::vector<int>& counts, const SymMatrix* sigma,
                           double tol = 1e-9);

/// True iff any constraint needs Sigma = M(d)^{-1} to evaluate.
bool has_covariance_rows(const std::vector<ExtraConstraint>& extras);

}  // namespace optex
