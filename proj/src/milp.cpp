#include "optex/milp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace optex {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

int sense_slot(Sense s) {
  switch (s) {
    case Sense::EQ: return 0;
    case Sense::GE: return 1;
    case Sense::LE: return 2;
  }
  return 0;
}
}  // namespace

double SparseRows::dot(int row, std::span<const double> x) const {
  double acc = 0.0;
  for (const auto& [col, val] : entries[row]) acc += val * x[col];
  return acc;
}

double MilpModel::objective_value(std::span<const double> x) const {
  double acc = 0.0;
  for (const auto& [var, val] : objective) acc += val * x[var];
  return acc;
}

double MilpModel::max_row_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int r = 0; r < eq.count(); ++r) {
    worst = std::max(worst, std::abs(eq.dot(r, x) - eq.rhs[r]));
  }
  for (int r = 0; r < ge.count(); ++r) {
    worst = std::max(worst, std::max(0.0, ge.rhs[r] - ge.dot(r, x)));
  }
  for (int r = 0; r < le.count(); ++r) {
    worst = std::max(worst, std::max(0.0, le.dot(r, x) - le.rhs[r]));
  }
  return worst;
}

double MilpModel::max_bound_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int v = 0; v < num_vars; ++v) {
    worst = std::max(worst, std::max(0.0, var_lower[v] - x[v]));
    worst = std::max(worst, std::max(0.0, x[v] - var_upper[v]));
  }
  return worst;
}

ModelBuilder::ModelBuilder(int num_vars)
    : num_vars_(num_vars),
      lower_(num_vars, -kInf),
      upper_(num_vars, kInf),
      integrality_(num_vars, false),
      names_(num_vars) {}

int ModelBuilder::add_row(Sense sense, double rhs) {
  const int slot = sense_slot(sense);
  rhs_[slot].push_back(rhs);
  return static_cast<int>(rhs_[slot].size()) - 1;
}

void ModelBuilder::add_term(Sense sense, int row, int var, double value) {
  if (value == 0.0) return;
  triplets_[sense_slot(sense)].push_back({row, var, value});
}

void ModelBuilder::set_objective(int var, double value) {
  objective_.emplace_back(var, value);
}

void ModelBuilder::set_bounds(int var, double lower, double upper) {
  lower_[var] = lower;
  upper_[var] = upper;
}

void ModelBuilder::set_integral(int var) { integrality_[var] = true; }

void ModelBuilder::set_name(int var, std::string name) { names_[var] = std::move(name); }

MilpModel ModelBuilder::finalize(VarLayout layout) {
  MilpModel model;
  model.num_vars = num_vars_;
  model.objective = std::move(objective_);
  model.var_lower = std::move(lower_);
  model.var_upper = std::move(upper_);
  model.integrality = std::move(integrality_);
  model.var_names = std::move(names_);
  model.layout = layout;

  SparseRows* slots[3] = {&model.eq, &model.ge, &model.le};
  for (int s = 0; s < 3; ++s) {
    SparseRows& rows = *slots[s];
    rows.rhs = std::move(rhs_[s]);
    rows.entries.assign(rows.rhs.size(), {});
    auto& trips = triplets_[s];
    std::stable_sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.var < b.var;
    });
    for (const Triplet& t : trips) {
      auto& row = rows.entries[t.row];
      if (!row.empty() && row.back().first == t.var) {
        row.back().second += t.value;  // duplicates summed at finalize
      } else {
        row.emplace_back(t.var, t.value);
      }
    }
  }
  return model;
}

MilpModel build(const DesignProblem& problem, const CriterionSpec& spec, const CovBounds& bounds,
                const std::vector<ExtraConstraint>& extras) {
  const int n = problem.num_points();
  const int m = problem.dimension();
  if (spec.dimension() != m || bounds.upper.size() != m) {
    throw DimensionMismatch("problem, criterion and bounds dimensions differ");
  }
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      if (!std::isfinite(bounds.lower(j, k)) || !std::isfinite(bounds.upper(j, k))) {
        throw InfiniteBound("McCormick linearization needs finite covariance bounds");
      }
    }
  }
  for (const ExtraConstraint& c : extras) c.validate(n, m);

  VarLayout layout{n, m};
  ModelBuilder b(layout.num_vars());

  // Names and bounds.
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        const int var = layout.z_index(i, j, k);
        b.set_name(var, "z_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + "_" +
                            std::to_string(k + 1));
        b.set_bounds(var, std::min(0.0, bounds.lower(j, k)), std::max(0.0, bounds.upper(j, k)));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const int var = layout.d_index(i);
    b.set_name(var, "d_" + std::to_string(i + 1));
    b.set_bounds(var, 0.0, 1.0);
    b.set_integral(var);
  }
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) {
      const int var = layout.c_index(j, k);
      b.set_name(var, "c_" + std::to_string(j + 1) + "_" + std::to_string(k + 1));
      b.set_bounds(var, bounds.lower(j, k), bounds.upper(j, k));
    }
  }
  b.set_name(layout.phi_index(), "phi");

  // Item 1: sum_i (I_m (x) M_i) z_i = vec(I_m), row (p,q) at index p + q*m.
  std::vector<int> eq_rows(m * m);
  for (int q = 0; q < m; ++q) {
    for (int p = 0; p < m; ++p) {
      eq_rows[p + q * m] = b.add_row(Sense::EQ, p == q ? 1.0 : 0.0);
    }
  }
  for (int i = 0; i < n; ++i) {
    const Vector& f = problem.regressor(i);
    for (int q = 0; q < m; ++q) {
      for (int p = 0; p < m; ++p) {
        const int row = eq_rows[p + q * m];
        // (M_i Z_i)_{pq} = sum_r f_p f_r (Z_i)_{rq}
        for (int r = 0; r < m; ++r) {
          b.add_term(Sense::EQ, row, layout.z_index(i, r, q), f(p) * f(r));
        }
      }
    }
  }

  // Items 2-3: the four McCormick families per (i, j, k).
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        const int row = b.add_row(Sense::GE, 0.0);  // z - d L >= 0
        b.add_term(Sense::GE, row, layout.z_index(i, j, k), 1.0);
        b.add_term(Sense::GE, row, layout.d_index(i), -bounds.lower(j, k));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        const int row = b.add_row(Sense::GE, -bounds.upper(j, k));  // z - d U - c >= -U
        b.add_term(Sense::GE, row, layout.z_index(i, j, k), 1.0);
        b.add_term(Sense::GE, row, layout.d_index(i), -bounds.upper(j, k));
        b.add_term(Sense::GE, row, layout.c_index(j, k), -1.0);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        const int row = b.add_row(Sense::LE, 0.0);  // z - d U <= 0
        b.add_term(Sense::LE, row, layout.z_index(i, j, k), 1.0);
        b.add_term(Sense::LE, row, layout.d_index(i), -bounds.upper(j, k));
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        const int row = b.add_row(Sense::LE, -bounds.lower(j, k));  // z - d L - c <= -L
        b.add_term(Sense::LE, row, layout.z_index(i, j, k), 1.0);
        b.add_term(Sense::LE, row, layout.d_index(i), -bounds.lower(j, k));
        b.add_term(Sense::LE, row, layout.c_index(j, k), -1.0);
      }
    }
  }

  // Item 4: cardinality.
  {
    const int row = b.add_row(Sense::EQ, static_cast<double>(problem.run_budget()));
    for (int i = 0; i < n; ++i) b.add_term(Sense::EQ, row, layout.d_index(i), 1.0);
  }

  // Item 6: epigraph rows -vec(G_l)'c + phi >= 0 with G_l = B_l B_l'.
  for (int l = 0; l < spec.num_blocks(); ++l) {
    const DenseMatrix g = spec.block(l) * spec.block(l).transpose();
    const int row = b.add_row(Sense::GE, 0.0);
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        b.add_term(Sense::GE, row, layout.c_index(j, k), -g(j, k));
      }
    }
    b.add_term(Sense::GE, row, layout.phi_index(), 1.0);
  }

  // User extras; augmentation tightens variable bounds instead of adding rows.
  for (const ExtraConstraint& c : extras) {
    switch (c.kind) {
      case ExtraConstraint::Kind::Augmentation: {
        const int trials = static_cast<int>(std::llround(c.rhs));
        if (trials > 1) {
          throw InfeasibleCaps("augmentation of " + std::to_string(trials) +
                               " trials exceeds the binary capacity; expand replications first");
        }
        if (trials == 1) b.set_bounds(layout.d_index(c.indices[0]), 1.0, 1.0);
        break;
      }
      case ExtraConstraint::Kind::DesignLinear: {
        const int row = b.add_row(c.sense, c.rhs);
        for (std::size_t t = 0; t < c.indices.size(); ++t) {
          b.add_term(c.sense, row, layout.d_index(c.indices[t]), c.coeffs[t]);
        }
        break;
      }
      case ExtraConstraint::Kind::CovarianceLinear: {
        const int row = b.add_row(c.sense, c.rhs);
        for (std::size_t t = 0; t < c.entries.size(); ++t) {
          b.add_term(c.sense, row, layout.c_index(c.entries[t].first, c.entries[t].second),
                     c.coeffs[t]);
        }
        break;
      }
    }
  }

  b.set_objective(layout.phi_index(), 1.0);
  return b.finalize(layout);
}

std::vector<int> ExpandedProblem::fold(const std::vector<int>& expanded_counts) const {
  std::vector<int> counts(original_n, 0);
  for (std::size_t e = 0; e < expanded_counts.size(); ++e) {
    counts[origin[e]] += expanded_counts[e];
  }
  return counts;
}

std::vector<int> ExpandedProblem::unfold(const std::vector<int>& original_counts) const {
  std::vector<int> remaining = original_counts;
  std::vector<int> expanded(origin.size(), 0);
  for (std::size_t e = 0; e < origin.size(); ++e) {
    if (remaining[origin[e]] > 0) {
      expanded[e] = 1;
      --remaining[origin[e]];
    }
  }
  for (int r : remaining) {
    if (r != 0) throw InfeasibleCaps("replication counts exceed the expansion capacity");
  }
  return expanded;
}

std::vector<ExtraConstraint> ExpandedProblem::translate(
    const std::vector<ExtraConstraint>& extras) const {
  std::vector<std::vector<int>> copies(original_n);
  for (std::size_t e = 0; e < origin.size(); ++e) copies[origin[e]].push_back(static_cast<int>(e));

  std::vector<ExtraConstraint> out;
  for (const ExtraConstraint& c : extras) {
    switch (c.kind) {
      case ExtraConstraint::Kind::CovarianceLinear:
        out.push_back(c);
        break;
      case ExtraConstraint::Kind::DesignLinear: {
        ExtraConstraint t = c;
        t.indices.clear();
        t.coeffs.clear();
        for (std::size_t p = 0; p < c.indices.size(); ++p) {
          for (int e : copies[c.indices[p]]) {
            t.indices.push_back(e);
            t.coeffs.push_back(c.coeffs[p]);
          }
        }
        out.push_back(std::move(t));
        break;
      }
      case ExtraConstraint::Kind::Augmentation: {
        const int trials = static_cast<int>(std::llround(c.rhs));
        const auto& cs = copies[c.indices[0]];
        if (trials > static_cast<int>(cs.size())) {
          throw InfeasibleCaps("augmentation exceeds the replication cap of point " +
                               std::to_string(c.indices[0] + 1));
        }
        for (int t = 0; t < trials; ++t) out.push_back(ExtraConstraint::augmentation(cs[t], 1));
        break;
      }
    }
  }
  return out;
}

ExpandedProblem expand_replications(const DesignProblem& problem, const std::vector<int>& caps) {
  const int n = problem.num_points();
  if (static_cast<int>(caps.size()) != n) {
    throw DimensionMismatch("caps length differs from the number of design points");
  }
  long capacity = 0;
  for (int i = 0; i < n; ++i) {
    if (caps[i] < 0) throw InfeasibleCaps("replication caps must be nonnegative");
    capacity += std::min(caps[i], problem.run_budget());
  }
  if (capacity < problem.run_budget()) {
    throw InfeasibleCaps("total replication capacity " + std::to_string(capacity) +
                         " is below the run budget " + std::to_string(problem.run_budget()));
  }

  std::vector<Vector> regressors;
  std::vector<std::string> labels;
  std::vector<int> origin;
  for (int i = 0; i < n; ++i) {
    const int copies = std::min(caps[i], problem.run_budget());
    for (int t = 0; t < copies; ++t) {
      regressors.push_back(problem.regressor(i));
      labels.push_back(copies > 1 ? problem.label(i) + "#" + std::to_string(t + 1)
                                  : problem.label(i));
      origin.push_back(i);
    }
  }
  ExpandedProblem out{DesignProblem(std::move(regressors), problem.run_budget(), std::move(labels)),
                      std::move(origin), n};
  return out;
}

std::vector<ExtraConstraint> covariance_constraint_from_criterion(const CriterionSpec& spec2,
                                                                  double limit) {
  const int m = spec2.dimension();
  std::vector<ExtraConstraint> rows;
  rows.reserve(spec2.num_blocks());
  for (int l = 0; l < spec2.num_blocks(); ++l) {
    const DenseMatrix g = spec2.block(l) * spec2.block(l).transpose();
    std::vector<std::pair<int, int>> entries;
    std::vector<double> coeffs;
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        if (g(j, k) != 0.0) {
          entries.emplace_back(j, k);
          coeffs.push_back(g(j, k));
        }
      }
    }
    rows.push_back(
        ExtraConstraint::covariance_linear(std::move(entries), std::move(coeffs), Sense::LE, limit));
  }
  return rows;
}

std::vector<double> embed_design(const MilpModel& model, const DesignProblem& problem,
                                 const CriterionSpec& spec, const ExactDesign& design) {
  const VarLayout& layout = model.layout;
  if (design.num_points() != layout.n || !design.is_binary()) {
    throw DimensionMismatch("embedding requires a binary design on the model's points");
  }
  const SymMatrix sigma = invert(info_matrix(problem, design));
  const int m = layout.m;
  std::vector<double> x(layout.num_vars(), 0.0);
  for (int i = 0; i < layout.n; ++i) {
    if (design.count(i) == 0) continue;
    x[layout.d_index(i)] = 1.0;
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        x[layout.z_index(i, j, k)] = sigma(j, k);
      }
    }
  }
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) {
      x[layout.c_index(j, k)] = sigma(j, k);
    }
  }
  x[layout.phi_index()] = psi_value(spec, sigma);
  return x;
}

}  // namespace optex
