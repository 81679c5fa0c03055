#include "optex/constraints.hpp"

#include <cmath>

namespace optex {

std::string to_string(Sense s) {
  switch (s) {
    case Sense::LE: return "<=";
    case Sense::GE: return ">=";
    case Sense::EQ: return "=";
  }
  return "?";
}

ExtraConstraint ExtraConstraint::design_linear(std::vector<int> indices,
                                               std::vector<double> coeffs, Sense sense,
                                               double rhs) {
  ExtraConstraint c;
  c.kind = Kind::DesignLinear;
  c.indices = std::move(indices);
  c.coeffs = std::move(coeffs);
  c.sense = sense;
  c.rhs = rhs;
  return c;
}

ExtraConstraint ExtraConstraint::covariance_linear(std::vector<std::pair<int, int>> entries,
                                                   std::vector<double> coeffs, Sense sense,
                                                   double rhs) {
  ExtraConstraint c;
  c.kind = Kind::CovarianceLinear;
  c.entries = std::move(entries);
  c.coeffs = std::move(coeffs);
  c.sense = sense;
  c.rhs = rhs;
  return c;
}

ExtraConstraint ExtraConstraint::augmentation(int point, int performed_trials) {
  ExtraConstraint c;
  c.kind = Kind::Augmentation;
  c.indices = {point};
  c.coeffs = {1.0};
  c.sense = Sense::GE;
  c.rhs = static_cast<double>(performed_trials);
  return c;
}

void ExtraConstraint::validate(int num_points, int dimension) const {
  switch (kind) {
    case Kind::DesignLinear:
    case Kind::Augmentation:
      if (indices.size() != coeffs.size() || indices.empty()) {
        throw SchemaError("design constraint needs matching indices/coeffs");
      }
      for (int i : indices) {
        if (i < 0 || i >= num_points) throw SchemaError("design constraint index out of range");
      }
      if (kind == Kind::Augmentation && (sense != Sense::GE || rhs < 0)) {
        throw SchemaError("augmentation must be d_i >= trials with trials >= 0");
      }
      break;
    case Kind::CovarianceLinear:
      if (entries.size() != coeffs.size() || entries.empty()) {
        throw SchemaError("covariance constraint needs matching entries/coeffs");
      }
      for (auto [j, k] : entries) {
        if (j < 0 || j >= dimension || k < 0 || k >= dimension) {
          throw SchemaError("covariance constraint entry out of range");
        }
      }
      break;
  }
  if (!std::isfinite(rhs)) throw SchemaError("constraint rhs must be finite");
  for (double v : coeffs) {
    if (!std::isfinite(v)) throw SchemaError("constraint coefficient must be finite");
  }
}

bool sense_holds(Sense sense, double lhs, double rhs, double tol) {
  switch (sense) {
    case Sense::LE: return lhs <= rhs + tol;
    case Sense::GE: return lhs >= rhs - tol;
    case Sense::EQ: return std::abs(lhs - rhs) <= tol;
  }
  return false;
}

double design_row_value(const ExtraConstraint& c, const std::vector<int>& counts) {
  double acc = 0.0;
  for (std::size_t t = 0; t < c.indices.size(); ++t) {
    acc += c.coeffs[t] * counts[c.indices[t]];
  }
  return acc;
}

double covariance_row_value(const ExtraConstraint& c, const SymMatrix& sigma) {
  double acc = 0.0;
  for (std::size_t t = 0; t < c.entries.size(); ++t) {
    acc += c.coeffs[t] * sigma(c.entries[t].first, c.entries[t].second);
  }
  return acc;
}

bool satisfies_constraints(const std::vector<ExtraConstraint>& extras,
                           const std::vector<int>& counts, const SymMatrix* sigma, double tol) {
  for (const ExtraConstraint& c : extras) {
    double lhs = 0.0;
    switch (c.kind) {
      case ExtraConstraint::Kind::DesignLinear:
      case ExtraConstraint::Kind::Augmentation:
        lhs = design_row_value(c, counts);
        break;
      case ExtraConstraint::Kind::CovarianceLinear:
        if (sigma == nullptr) return false;
        lhs = covariance_row_value(c, *sigma);
        break;
    }
    if (!sense_holds(c.sense, lhs, c.rhs, tol)) return false;
  }
  return true;
}

bool has_covariance_rows(const std::vector<ExtraConstraint>& extras) {
  for (const ExtraConstraint& c : extras) {
    if (c.kind == ExtraConstraint::Kind::CovarianceLinear) return true;
  }
  return false;
}

}  // namespace optex
