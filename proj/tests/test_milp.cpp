#include <doctest.h>

#include <random>

#include "optex/enumerate.hpp"
#include "optex/milp.hpp"
#include "test_util.hpp"

using namespace optex;
using namespace optex::testutil;

namespace {

// One-parameter two-point instance small enough to write out by hand:
// f_1 = (1), f_2 = (2), N = 1, A-criterion, bounds L = 0, U = alpha = 1.
struct TinyInstance {
  DesignProblem problem;
  CriterionSpec spec;
  CovBounds bounds;

  TinyInstance()
      : problem({Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)}, 1),
        spec({DenseMatrix::Identity(1, 1)}, CriterionKind::A),
        bounds(SymMatrix::zero(1), SymMatrix::identity(1), 1.0) {}
};

CovBounds default_bounds(const DesignProblem& problem, const CriterionSpec& spec) {
  const OracleResult oracle = enumerate_best(problem, spec);
  return combined_bounds(problem, spec, oracle.best);
}

}  // namespace

TEST_SUITE_BEGIN("milp");

TEST_CASE("variable count follows the layout formula") {
  const DesignProblem quad = quadratic_grid(31, 5);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, quad);
  const MilpModel model = build(quad, spec, default_bounds(quad, spec));
  CHECK(model.num_vars == 31 * 9 + 31 + 9 + 1);
  CHECK(model.num_vars == 320);
}

TEST_CASE("row counts follow the closed forms") {
  std::mt19937_64 rng(73);
  for (int rep = 0; rep < 6; ++rep) {
    const int m = 2 + static_cast<int>(rng() % 3);
    const int n = m + 2 + static_cast<int>(rng() % 5);
    const int budget = m + static_cast<int>(rng() % (n - m));
    const DesignProblem problem = gaussian_problem(n, m, budget, rng);
    const CriterionKind kind = rep % 2 == 0 ? CriterionKind::MV : CriterionKind::G;
    const CriterionSpec spec = CriterionSpec::preset(kind, problem);
    const MilpModel model = build(problem, spec, default_bounds(problem, spec));
    CHECK(model.num_vars == n * m * m + n + m * m + 1);
    CHECK(model.eq.count() == m * m + 1);
    CHECK(model.ge.count() == 2 * n * m * m + spec.num_blocks());
    CHECK(model.le.count() == 2 * n * m * m);
  }
}

TEST_CASE("tiny hand-built model matches exactly") {
  const TinyInstance tiny;
  const MilpModel model = build(tiny.problem, tiny.spec, tiny.bounds);
  // Layout: x = (z_1, z_2, d_1, d_2, c, phi).
  CHECK(model.num_vars == 6);
  const int z1 = 0, z2 = 1, d1 = 2, d2 = 3, c = 4, phi = 5;
  CHECK(model.layout.z_index(0, 0, 0) == z1);
  CHECK(model.layout.d_index(1) == d2);
  CHECK(model.layout.c_index(0, 0) == c);
  CHECK(model.layout.phi_index() == phi);

  using Row = std::vector<std::pair<int, double>>;
  // Equalities: information identity then cardinality.
  REQUIRE(model.eq.count() == 2);
  CHECK(model.eq.entries[0] == Row{{z1, 1.0}, {z2, 4.0}});
  CHECK(model.eq.rhs[0] == 1.0);
  CHECK(model.eq.entries[1] == Row{{d1, 1.0}, {d2, 1.0}});
  CHECK(model.eq.rhs[1] == 1.0);

  // McCormick >= rows: z_i - d_i L >= 0 (L = 0), then z_i - d_i U - c >= -U.
  REQUIRE(model.ge.count() == 5);
  CHECK(model.ge.entries[0] == Row{{z1, 1.0}});
  CHECK(model.ge.rhs[0] == 0.0);
  CHECK(model.ge.entries[1] == Row{{z2, 1.0}});
  CHECK(model.ge.entries[2] == Row{{z1, 1.0}, {d1, -1.0}, {c, -1.0}});
  CHECK(model.ge.rhs[2] == -1.0);
  CHECK(model.ge.entries[3] == Row{{z2, 1.0}, {d2, -1.0}, {c, -1.0}});
  CHECK(model.ge.rhs[3] == -1.0);
  // Epigraph row: -c + phi >= 0.
  CHECK(model.ge.entries[4] == Row{{c, -1.0}, {phi, 1.0}});
  CHECK(model.ge.rhs[4] == 0.0);

  // McCormick <= rows: z_i - d_i U <= 0 then z_i - d_i L - c <= -L (L = 0).
  REQUIRE(model.le.count() == 4);
  CHECK(model.le.entries[0] == Row{{z1, 1.0}, {d1, -1.0}});
  CHECK(model.le.rhs[0] == 0.0);
  CHECK(model.le.entries[1] == Row{{z2, 1.0}, {d2, -1.0}});
  CHECK(model.le.entries[2] == Row{{z1, 1.0}, {c, -1.0}});
  CHECK(model.le.rhs[2] == 0.0);
  CHECK(model.le.entries[3] == Row{{z2, 1.0}, {c, -1.0}});

  CHECK(model.objective == std::vector<std::pair<int, double>>{{phi, 1.0}});
  CHECK(model.integrality[d1]);
  CHECK(model.integrality[d2]);
  CHECK_FALSE(model.integrality[z1]);
  CHECK_FALSE(model.integrality[c]);
  CHECK(model.var_lower[d1] == 0.0);
  CHECK(model.var_upper[d1] == 1.0);
  CHECK(model.var_lower[c] == 0.0);
  CHECK(model.var_upper[c] == 1.0);
}

TEST_CASE("design constraint appends one row over the selected variables") {
  const DesignProblem quad = quadratic_grid(31, 5);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, quad);
  const CovBounds bounds = default_bounds(quad, spec);
  const auto row = ExtraConstraint::design_linear({5, 6, 7, 8, 9, 10},
                                                  std::vector<double>(6, 1.0), Sense::GE, 1.0);
  const MilpModel base = build(quad, spec, bounds);
  const MilpModel with = build(quad, spec, bounds, {row});
  REQUIRE(with.ge.count() == base.ge.count() + 1);
  const auto& appended = with.ge.entries.back();
  REQUIRE(appended.size() == 6);
  for (int t = 0; t < 6; ++t) {
    CHECK(appended[t].first == with.layout.d_index(5 + t));
    CHECK(appended[t].second == 1.0);
  }
  CHECK(with.ge.rhs.back() == 1.0);
}

TEST_CASE("infinite bounds are rejected") {
  const TinyInstance tiny;
  DenseMatrix bad = DenseMatrix::Constant(1, 1, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(CovBounds(SymMatrix::zero(1), SymMatrix(bad), 1.0), InfiniteBound);
}

TEST_CASE("embedded designs satisfy every row and reproduce the objective") {
  std::mt19937_64 rng(79);
  for (int rep = 0; rep < 8; ++rep) {
    const int m = 2 + static_cast<int>(rng() % 2);
    const int n = m + 3 + static_cast<int>(rng() % 3);
    const int budget = m + 1;
    const DesignProblem problem = gaussian_problem(n, m, budget, rng);
    const CriterionKind kind = rep % 2 == 0 ? CriterionKind::A : CriterionKind::MV;
    const CriterionSpec spec = CriterionSpec::preset(kind, problem);
    const OracleResult oracle = enumerate_best(problem, spec);
    const CovBounds bounds = combined_bounds(problem, spec, oracle.best);
    const MilpModel model = build(problem, spec, bounds);

    const std::vector<double> x = embed_design(model, problem, spec, oracle.best);
    CHECK(model.max_row_violation(x) < 1e-8);
    CHECK(model.max_bound_violation(x) < 1e-9);
    const double psi = psi_value(spec, invert(info_matrix(problem, oracle.best)));
    CHECK(model.objective_value(x) == doctest::Approx(psi).epsilon(1e-9));
  }
}

TEST_CASE("replication expansion: identity caps") {
  const DesignProblem quad = quadratic_grid(7, 3);
  const ExpandedProblem expanded = expand_replications(quad, std::vector<int>(7, 1));
  CHECK(expanded.problem.num_points() == 7);
  for (int i = 0; i < 7; ++i) CHECK(expanded.origin[i] == i);
}

TEST_CASE("replication expansion duplicates each point N times") {
  const DesignProblem quad = quadratic_grid(31, 5);
  const ExpandedProblem expanded = expand_replications(quad, std::vector<int>(31, 5));
  CHECK(expanded.problem.num_points() == 155);
  CHECK(expanded.origin.front() == 0);
  CHECK(expanded.origin.back() == 30);
  for (std::size_t e = 0; e < expanded.origin.size(); ++e) {
    CHECK((expanded.problem.regressor(e) - quad.regressor(expanded.origin[e])).norm() == 0.0);
  }
}

TEST_CASE("fold and unfold are inverse on random replicated designs") {
  const DesignProblem quad = quadratic_grid(9, 4);
  const ExpandedProblem expanded = expand_replications(quad, std::vector<int>(9, 3));
  std::mt19937_64 rng(83);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<int> counts(9, 0);
    int total = 0;
    while (total < 4) {
      const int i = static_cast<int>(rng() % 9);
      if (counts[i] < 3) {
        ++counts[i];
        ++total;
      }
    }
    CHECK(expanded.fold(expanded.unfold(counts)) == counts);
  }
}

TEST_CASE("capacity shortfalls are rejected") {
  const DesignProblem quad = quadratic_grid(7, 4);
  std::vector<int> caps(7, 0);
  caps[0] = 2;
  caps[1] = 1;
  CHECK_THROWS_AS(expand_replications(quad, caps), InfeasibleCaps);
}

TEST_CASE("criterion-limit rows expand as expected") {
  const DesignProblem quad = quadratic_grid(31, 5);

  // A-limit: one row summing the diagonal entries of c.
  const CriterionSpec a = CriterionSpec::preset(CriterionKind::A, quad);
  const auto a_rows = covariance_constraint_from_criterion(a, 2.5);
  REQUIRE(a_rows.size() == 1);
  REQUIRE(a_rows[0].entries.size() == 3);
  for (const auto& [j, k] : a_rows[0].entries) CHECK(j == k);
  CHECK(a_rows[0].rhs == 2.5);
  CHECK(a_rows[0].sense == Sense::LE);

  // G-limit: one row per design point, f_i' Sigma f_i <= limit.
  const CriterionSpec g = CriterionSpec::preset(CriterionKind::G, quad);
  const auto g_rows = covariance_constraint_from_criterion(g, 0.9);
  CHECK(g_rows.size() == 31);

  // MV-limit: m rows selecting the diagonal.
  const CriterionSpec mv = CriterionSpec::preset(CriterionKind::MV, quad);
  const auto mv_rows = covariance_constraint_from_criterion(mv, 1.0);
  REQUIRE(mv_rows.size() == 3);
  for (int l = 0; l < 3; ++l) {
    REQUIRE(mv_rows[l].entries.size() == 1);
    CHECK(mv_rows[l].entries[0].first == l);
    CHECK(mv_rows[l].entries[0].second == l);
  }
}

TEST_CASE("augmentation becomes a bound fixing rather than a row") {
  const DesignProblem quad = quadratic_grid(9, 4);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, quad);
  const CovBounds bounds = default_bounds(quad, spec);
  const MilpModel base = build(quad, spec, bounds);
  const MilpModel with = build(quad, spec, bounds, {ExtraConstraint::augmentation(4, 1)});
  CHECK(with.num_rows() == base.num_rows());
  CHECK(with.var_lower[with.layout.d_index(4)] == 1.0);
  CHECK(with.var_upper[with.layout.d_index(4)] == 1.0);
}

TEST_SUITE_END();
