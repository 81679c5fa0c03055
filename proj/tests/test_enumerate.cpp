#include <doctest.h>

#include <random>

#include "optex/enumerate.hpp"
#include "test_util.hpp"

using namespace optex;
using namespace optex::testutil;

TEST_SUITE_BEGIN("enumerate");

TEST_CASE("count_designs") {
  CHECK(count_designs(5, 3, {}) == 10);
  CHECK(count_designs(31, 5, {}) == 169911);
  CHECK(count_designs(4, 2, {}) == 6);
  CHECK(count_designs(31, 5, std::vector<int>(31, 5)) == 324632);  // multisets C(35,5)
}

TEST_CASE("signed unit pairs: best A value and examined count") {
  std::vector<Vector> regs;
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{
           {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}) {
    Vector f(2);
    f << a, b;
    regs.push_back(f);
  }
  const DesignProblem problem(regs, 2);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  const OracleResult result = enumerate_best(problem, spec);
  CHECK(result.best_value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(result.examined == 6);
  CHECK(result.singular_rejected == 2);  // the +-e1 and +-e2 pairs
}

TEST_CASE("n equal to N leaves a single design") {
  const DesignProblem problem = quadratic_grid(4, 4);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  const OracleResult result = enumerate_best(problem, spec);
  CHECK(result.examined == 1);
  CHECK(result.best.counts() == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("permutation of the points permutes the best design") {
  std::mt19937_64 rng(41);
  const DesignProblem problem = gaussian_problem(7, 3, 3, rng);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  const OracleResult base = enumerate_best(problem, spec);

  // Rotate the design points by two positions.
  std::vector<Vector> rotated;
  for (int i = 0; i < 7; ++i) rotated.push_back(problem.regressor((i + 2) % 7));
  const DesignProblem problem2(rotated, 3);
  const CriterionSpec spec2 = CriterionSpec::preset(CriterionKind::A, problem2);
  const OracleResult shifted = enumerate_best(problem2, spec2);

  CHECK(shifted.best_value == doctest::Approx(base.best_value).epsilon(1e-12));
  for (int i = 0; i < 7; ++i) {
    CHECK(shifted.best.count(i) == base.best.count((i + 2) % 7));
  }
}

TEST_CASE("constraints filter the search") {
  const DesignProblem problem = quadratic_grid(7, 3);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  // Force at least one point in the middle third.
  const auto row = ExtraConstraint::design_linear({2, 3, 4}, {1.0, 1.0, 1.0}, Sense::GE, 1.0);
  const OracleResult constrained = enumerate_best(problem, spec, {row});
  int middle = 0;
  for (int i : {2, 3, 4}) middle += constrained.best.count(i);
  CHECK(middle >= 1);
  const OracleResult free_run = enumerate_best(problem, spec);
  CHECK(constrained.best_value >= free_run.best_value - 1e-12);
  CHECK(constrained.constraint_rejected > 0);
}

TEST_CASE("caps enumerate replicated designs") {
  const DesignProblem problem = quadratic_grid(5, 4);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  const OracleResult capped = enumerate_best(problem, spec, {}, std::vector<int>(5, 4));
  const OracleResult binary = enumerate_best(problem, spec);
  CHECK(capped.best_value <= binary.best_value + 1e-12);
  int total = 0;
  for (int c : capped.best.counts()) total += c;
  CHECK(total == 4);
}

TEST_CASE("too-large instances are rejected up front") {
  const DesignProblem problem = quadratic_grid(31, 5);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  OracleConfig config;
  config.max_designs = 1000;
  CHECK_THROWS_AS(enumerate_best(problem, spec, {}, {}, config), TooLarge);
}

TEST_CASE("contradictory constraints yield NoFeasibleDesign") {
  const DesignProblem problem = quadratic_grid(5, 3);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::A, problem);
  const auto impossible =
      ExtraConstraint::design_linear({0, 1, 2, 3, 4}, {1.0, 1.0, 1.0, 1.0, 1.0}, Sense::GE, 4.0);
  CHECK_THROWS_AS(enumerate_best(problem, spec, {impossible}), NoFeasibleDesign);
}

TEST_SUITE_END();
