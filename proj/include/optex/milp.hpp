#pragma once

#include <span>

#include "optex/bounds.hpp"
#include "optex/constraints.hpp"

namespace optex {

/// Variable layout of the linearized program: x = (z', d', c', phi)' with
/// z of length n*m^2 (z_i = vec(Z_i), column-major), d of length n, c of
/// length m^2 (vec(Sigma), column-major) and a single epigraph variable.
struct VarLayout {
  int n = 0;
  int m = 0;

  int z_size() const { return n * m * m; }
  int z_index(int i, int j, int k) const { return i * m * m + k * m + j; }
  int d_index(int i) const { return z_size() + i; }
  int c_index(int j, int k) const { return z_size() + n + k * m + j; }
  int phi_index() const { return z_size() + n + m * m; }
  int num_vars() const { return z_size() + n + m * m + 1; }

  bool is_d(int var) const { return var >= z_size() && var < z_size() + n; }
};

/// Rows of one sense, stored sparse with right-hand sides. Entries within a
/// row are sorted by column and duplicates are summed at finalize time.
struct SparseRows {
  std::vector<std::vector<std::pair<int, double>>> entries;
  std::vector<double> rhs;

  int count() const { return static_cast<int>(rhs.size()); }
  double dot(int row, std::span<const double> x) const;
};

/// A mixed-integer linear program over x = (z', d', c', phi)'.
struct MilpModel {
  int num_vars = 0;
  std::vector<std::pair<int, double>> objective;  // sparse, minimize
  SparseRows eq, ge, le;
  std::vector<double> var_lower, var_upper;  // +-infinity allowed
  std::vector<bool> integrality;
  std::vector<std::string> var_names;
  VarLayout layout;

  int num_rows() const { return eq.count() + ge.count() + le.count(); }
  double objective_value(std::span<const double> x) const;
  /// Largest absolute violation over all rows (bounds not included).
  double max_row_violation(std::span<const double> x) const;
  /// Largest violation of the variable bounds.
  double max_bound_violation(std::span<const double> x) const;
};

/// Incremental triplet accumulator used by the builders.
class ModelBuilder {
 public:
  explicit ModelBuilder(int num_vars);

  int add_row(Sense sense, double rhs);            // returns row id within its sense
  void add_term(Sense sense, int row, int var, double value);
  void set_objective(int var, double value);
  void set_bounds(int var, double lower, double upper);
  void set_integral(int var);
  void set_name(int var, std::string name);

  MilpModel finalize(VarLayout layout);

 private:
  struct Triplet {
    int row;
    int var;
    double value;
  };
  int num_vars_;
  std::vector<Triplet> triplets_[3];
  std::vector<double> rhs_[3];
  std::vector<std::pair<int, double>> objective_;
  std::vector<double> lower_, upper_;
  std::vector<bool> integrality_;
  std::vector<std::string> names_;
};

/// Assembles the exact linearized program:
///   minimize phi subject to
///   (1) sum_i (I_m (x) M_i) z_i = vec(I_m)          [m^2 equality rows]
///   (2) z_ijk - d_i L_jk               >= 0          [n m^2 rows]
///       z_ijk - d_i U_jk - c_jk        >= -U_jk      [n m^2 rows]
///   (3) z_ijk - d_i U_jk               <= 0          [n m^2 rows]
///       z_ijk - d_i L_jk - c_jk        <= -L_jk      [n m^2 rows]
///   (4) 1'd = N                                       [1 row]
///   (6) -vec(B_l B_l')'c + phi >= 0, l = 1..K         [K rows]
/// plus user extras. Design variables are binary; z and c carry the interval
/// bounds implied by L, U. Augmentation extras become variable-bound
/// tightenings (d_i fixed to 1) rather than rows.
MilpModel build(const DesignProblem& problem, const CriterionSpec& spec, const CovBounds& bounds,
                const std::vector<ExtraConstraint>& extras = {});

/// Replication support: each point i is duplicated min(N_i, N) times and the
/// copies form a binary problem. origin maps expanded points back to the
/// original index.
struct ExpandedProblem {
  DesignProblem problem;      // expanded, binary-mode
  std::vector<int> origin;    // expanded index -> original index
  int original_n = 0;

  /// Folds a binary solution on the expanded points back to replication
  /// counts per original point.
  std::vector<int> fold(const std::vector<int>& expanded_counts) const;
  /// Spreads original-point replication counts onto expanded copies.
  std::vector<int> unfold(const std::vector<int>& original_counts) const;
  /// Rewrites constraints stated on original points onto the copies.
  std::vector<ExtraConstraint> translate(const std::vector<ExtraConstraint>& extras) const;
};

ExpandedProblem expand_replications(const DesignProblem& problem, const std::vector<int>& caps);

/// K2 covariance rows vec(B_l B_l')' c <= limit, bounding the value of a
/// second criterion from the same class.
std::vector<ExtraConstraint> covariance_constraint_from_criterion(const CriterionSpec& spec2,
                                                                  double limit);

/// The warm-start embedding of a binary design: z = d (x) vec(Sigma),
/// c = vec(Sigma), phi = Psi(Sigma) with Sigma = M(d)^{-1}. Satisfies every
/// model row whenever Sigma lies inside the covariance bounds.
std::vector<double> embed_design(const MilpModel& model, const DesignProblem& problem,
                                 const CriterionSpec& spec, const ExactDesign& design);

}  // namespace optex
