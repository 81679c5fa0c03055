// Acceptance suite: end-to-end checks of the full pipeline at fixed
// tolerances, one pass/fail line per criterion. Exit code 0 iff every
// criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "optex/enumerate.hpp"
#include "optex/formats.hpp"
#include "optex/heuristic.hpp"
#include "optex/solver.hpp"

using namespace optex;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double now_sec() {
  using Clock = std::chrono::steady_clock;
  static const Clock::time_point start = Clock::now();
  return std::chrono::duration<double>(Clock::now() - start).count();
}

DesignProblem quadratic_grid(int n, int budget) {
  std::vector<Vector> regressors;
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) {
    const double x = -1.0 + 2.0 * i / (n - 1);
    Vector f(3);
    f << 1.0, x, x * x;
    regressors.push_back(f);
    labels.push_back(std::to_string(x));
  }
  return DesignProblem(std::move(regressors), budget, std::move(labels));
}

DesignProblem gaussian_problem(int n, int m, int budget, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  while (true) {
    std::vector<Vector> regressors;
    for (int i = 0; i < n; ++i) {
      Vector f(m);
      for (int j = 0; j < m; ++j) f(j) = normal(rng);
      regressors.push_back(f);
    }
    try {
      return DesignProblem(std::move(regressors), budget);
    } catch (const Error&) {
      continue;
    }
  }
}

SolveResult certified_solve(const DesignProblem& problem, const CriterionSpec& spec,
                            const std::vector<ExtraConstraint>& extras = {},
                            const ExactDesign* d0_override = nullptr,
                            const std::vector<int>& caps = {}) {
  const bool replicated = !caps.empty();
  std::optional<ExpandedProblem> expansion;
  if (replicated) expansion = expand_replications(problem, caps);
  const DesignProblem& model_problem = replicated ? expansion->problem : problem;
  const std::vector<ExtraConstraint> model_extras =
      replicated ? expansion->translate(extras) : extras;

  ExactDesign d0 = d0_override != nullptr
                       ? (replicated ? ExactDesign(expansion->unfold(d0_override->counts()),
                                                   problem.run_budget())
                                     : *d0_override)
                       : exchange_search(model_problem, spec, HeuristicConfig{10, 7, 100},
                                         model_extras);
  const CovBounds bounds = combined_bounds(model_problem, spec, d0);
  const MilpContext ctx = replicated
                              ? make_context_replicated(problem, caps, spec, bounds, extras)
                              : make_context(problem, spec, bounds, extras);
  return solve(ctx, d0, {});
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

// --------------------------------------------------------------------------
// 1. Branch-and-bound equals complete enumeration on randomized Gaussian
//    instances for all four presets.
void criterion1() {
  std::mt19937_64 rng(20240501);
  int instances = 0, matched = 0;
  double worst_rel = 0.0;
  while (instances < 40) {
    const int m = 2 + static_cast<int>(rng() % 4);           // 2..5
    const int n = std::min(14, m + 2 + static_cast<int>(rng() % 9));
    const int max_budget = std::min(7, n - 1);
    if (max_budget < m) continue;
    const int budget = m + static_cast<int>(rng() % (max_budget - m + 1));
    const DesignProblem problem = gaussian_problem(n, m, budget, rng);
    ++instances;
    for (const CriterionKind kind :
         {CriterionKind::A, CriterionKind::I, CriterionKind::MV, CriterionKind::G}) {
      const CriterionSpec spec = CriterionSpec::preset(kind, problem);
      const OracleResult oracle = enumerate_best(problem, spec);
      const SolveResult result = certified_solve(problem, spec);
      const double rel = std::abs(result.criterion_value - oracle.best_value) /
                         (1.0 + std::abs(oracle.best_value));
      worst_rel = std::max(worst_rel, rel);
      if (result.status == SolveStatus::Certified && rel <= 1e-7) ++matched;
    }
  }
  report(1, matched == 4 * instances,
         "oracle equivalence on " + std::to_string(instances) + " random instances x 4 presets: " +
             std::to_string(matched) + "/" + std::to_string(4 * instances) +
             " matched (worst rel diff " + fmt(worst_rel) + ")");
}

// --------------------------------------------------------------------------
// 2. Quadratic grid, n=31, N=5: all four presets equal enumeration over
//    C(31,5); the G-optimal support is {-1, -11/15, 0, 11/15, 1}.
struct QuadraticResults {
  std::vector<int> a_design, g_design;
  double a_value = 0.0, g_value = 0.0;
};

QuadraticResults criterion2() {
  const DesignProblem problem = quadratic_grid(31, 5);
  QuadraticResults out;
  bool pass = true;
  std::string detail;
  double slowest = 0.0;
  for (const CriterionKind kind :
       {CriterionKind::A, CriterionKind::I, CriterionKind::MV, CriterionKind::G}) {
    const CriterionSpec spec = CriterionSpec::preset(kind, problem);
    const OracleResult oracle = enumerate_best(problem, spec);
    const SolveResult result = certified_solve(problem, spec);
    slowest = std::max(slowest, result.wall_time_sec);
    const double rel = std::abs(result.criterion_value - oracle.best_value) /
                       (1.0 + std::abs(oracle.best_value));
    const bool ok = result.status == SolveStatus::Certified && rel <= 1e-7;
    pass = pass && ok;
    detail += to_string(kind) + "=" + fmt(result.criterion_value) +
              (ok ? " " : " (MISMATCH vs " + fmt(oracle.best_value) + ") ");
    if (kind == CriterionKind::A) {
      out.a_design = result.design.counts();
      out.a_value = result.criterion_value;
    }
    if (kind == CriterionKind::G) {
      out.g_design = result.design.counts();
      out.g_value = result.criterion_value;
      const std::vector<int> expected_support = {0, 4, 15, 26, 30};
      std::vector<int> support;
      for (int i = 0; i < 31; ++i) {
        if (result.design.count(i) > 0) support.push_back(i);
      }
      if (support != expected_support) {
        pass = false;
        detail += "(G support off) ";
      }
    }
  }
  report(2, pass, "quadratic n=31 N=5 vs C(31,5) enumeration: " + detail +
                      "(slowest solve " + fmt(slowest) + "s)");
  return out;
}

// --------------------------------------------------------------------------
// 3. Adding +-gamma (the positive root of -g^4 - 7g^2 + 4 = 0) to the grid
//    makes the G-optimal design exactly {-1, -gamma, 0, gamma, 1}.
void criterion3() {
  const double gamma = std::sqrt((-7.0 + std::sqrt(65.0)) / 2.0);
  std::vector<double> xs;
  for (int i = 0; i < 31; ++i) xs.push_back(-1.0 + 2.0 * i / 30.0);
  xs.push_back(-gamma);
  xs.push_back(gamma);
  std::sort(xs.begin(), xs.end());
  std::vector<Vector> regressors;
  for (double x : xs) {
    Vector f(3);
    f << 1.0, x, x * x;
    regressors.push_back(f);
  }
  const DesignProblem problem(regressors, 5);
  const CriterionSpec spec = CriterionSpec::preset(CriterionKind::G, problem);
  const OracleResult oracle = enumerate_best(problem, spec);
  const SolveResult result = certified_solve(problem, spec);

  std::set<double> support;
  for (int i = 0; i < problem.num_points(); ++i) {
    if (result.design.count(i) > 0) support.insert(xs[i]);
  }
  const std::set<double> expected = {-1.0, -gamma, 0.0, gamma, 1.0};
  bool same = support.size() == expected.size();
  if (same) {
    auto it1 = support.begin();
    auto it2 = expected.begin();
    for (; it1 != support.end(); ++it1, ++it2) same = same && std::abs(*it1 - *it2) < 1e-12;
  }
  const bool value_ok = result.status == SolveStatus::Certified &&
                        std::abs(result.criterion_value - oracle.best_value) <=
                            1e-7 * (1.0 + std::abs(oracle.best_value));
  report(3, same && value_ok,
         "augmented grid selects {-1, -gamma, 0, gamma, 1} with gamma=" + fmt(gamma) +
             (same ? "" : " (support differs)") + (value_ok ? "" : " (value differs)"));
}

// --------------------------------------------------------------------------
// 4. Replications with caps N_i = 5: A and MV replicate x=0 three times;
//    I and G stay binary. Everything checked against capped enumeration.
void criterion4() {
  const DesignProblem problem = quadratic_grid(31, 5);
  const std::vector<int> caps(31, 5);
  bool pass = true;
  std::string detail;
  for (const CriterionKind kind :
       {CriterionKind::A, CriterionKind::MV, CriterionKind::I, CriterionKind::G}) {
    const CriterionSpec spec = CriterionSpec::preset(kind, problem);
    const OracleResult oracle = enumerate_best(problem, spec, {}, caps);
    const SolveResult result = certified_solve(problem, spec, {}, nullptr, caps);
    const double rel = std::abs(result.criterion_value - oracle.best_value) /
                       (1.0 + std::abs(oracle.best_value));
    bool ok = result.status == SolveStatus::Certified && rel <= 1e-7;
    int center = result.design.count(15);  // x = 0
    int top = 0;
    for (int i = 0; i < 31; ++i) top = std::max(top, result.design.count(i));
    if (kind == CriterionKind::A || kind == CriterionKind::MV) {
      ok = ok && center == 3;
    } else {
      ok = ok && top == 1;
    }
    pass = pass && ok;
    detail += to_string(kind) + (ok ? " ok " : " FAIL ");
  }
  report(4, pass, "replicated designs (caps 5): A/MV put 3 trials at x=0, I/G stay binary: " +
                      detail);
}

// --------------------------------------------------------------------------
// 5. Constrained runs: the interval rows and the covariance-limited solve.
void criterion5(const QuadraticResults& quad) {
  const DesignProblem problem = quadratic_grid(31, 5);
  bool pass = true;
  std::string detail;

  // Space-filling rows: at least one trial in points 6..11 and in 21..26
  // (1-based), i.e. x in [-2/3, -1/3] and x in [1/3, 2/3].
  const std::vector<ExtraConstraint> interval_rows = {
      ExtraConstraint::design_linear({5, 6, 7, 8, 9, 10}, std::vector<double>(6, 1.0),
                                     Sense::GE, 1.0),
      ExtraConstraint::design_linear({20, 21, 22, 23, 24, 25}, std::vector<double>(6, 1.0),
                                     Sense::GE, 1.0)};
  // Reference design from the paper's workflow: one trial at each of
  // x in {-1, -7/15, 0, 8/15, 1}.
  std::vector<int> d0_counts(31, 0);
  for (int i : {0, 8, 15, 23, 30}) d0_counts[i] = 1;
  const ExactDesign d0(d0_counts, 5);

  for (const CriterionKind kind :
       {CriterionKind::A, CriterionKind::I, CriterionKind::MV, CriterionKind::G}) {
    const CriterionSpec spec = CriterionSpec::preset(kind, problem);
    const OracleResult oracle = enumerate_best(problem, spec, interval_rows);
    const SolveResult result = certified_solve(problem, spec, interval_rows, &d0);
    int left = 0, right = 0;
    for (int i = 5; i <= 10; ++i) left += result.design.count(i);
    for (int i = 20; i <= 25; ++i) right += result.design.count(i);
    const double rel = std::abs(result.criterion_value - oracle.best_value) /
                       (1.0 + std::abs(oracle.best_value));
    const bool ok =
        result.status == SolveStatus::Certified && rel <= 1e-7 && left >= 1 && right >= 1;
    pass = pass && ok;
    detail += "interval-" + to_string(kind) + (ok ? " ok " : " FAIL ");
  }

  // Covariance constraint: A-optimal design subject to Phi_G <= 0.9, with
  // the G-optimal design as the reference.
  {
    const CriterionSpec a_spec = CriterionSpec::preset(CriterionKind::A, problem);
    const CriterionSpec g_spec = CriterionSpec::preset(CriterionKind::G, problem);
    const std::vector<ExtraConstraint> g_limit =
        covariance_constraint_from_criterion(g_spec, 0.9);
    const OracleResult oracle = enumerate_best(problem, a_spec, g_limit);
    const ExactDesign g_design(quad.g_design, 5);
    const SolveResult result = certified_solve(problem, a_spec, g_limit, &g_design);

    const SymMatrix sigma = invert(info_matrix(problem, result.design));
    double max_var = 0.0;
    for (int i = 0; i < 31; ++i) {
      max_var = std::max(max_var,
                         problem.regressor(i).dot(sigma.mat() * problem.regressor(i)));
    }
    const double rel = std::abs(result.criterion_value - oracle.best_value) /
                       (1.0 + std::abs(oracle.best_value));
    const bool ok =
        result.status == SolveStatus::Certified && rel <= 1e-7 && max_var <= 0.9 + 1e-7;
    pass = pass && ok;
    detail += std::string("G-limited-A") + (ok ? " ok " : " FAIL ");

    // Paper anchors: Phi_G at the unconstrained A- and G-optimal designs.
    const double phi_g_at_a =
        criterion_value(g_spec, info_matrix(problem, ExactDesign(quad.a_design, 5)));
    const double phi_g_at_g = quad.g_value;
    const bool anchors_ok =
        std::abs(phi_g_at_a - 1.00) <= 0.01 && std::abs(phi_g_at_g - 0.75) <= 0.01;
    pass = pass && anchors_ok;
    detail += "anchors PhiG(dA*)=" + fmt(phi_g_at_a) + " PhiG(dG*)=" + fmt(phi_g_at_g) +
              (anchors_ok ? "" : " FAIL");
  }
  report(5, pass, "constrained runs: " + detail);
}

// --------------------------------------------------------------------------
// 6. Bound soundness: the enumerated optimal covariance matrix lies inside
//    [L, U]; closed forms hold exactly for A and MV.
void criterion6() {
  std::mt19937_64 rng(20240502);
  bool pass = true;
  double worst_violation = -1e300;
  int checked = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const int m = 2 + static_cast<int>(rng() % 3);
    const int n = m + 3 + static_cast<int>(rng() % 5);
    const int budget = std::min(n - 1, m + 1 + static_cast<int>(rng() % 2));
    const DesignProblem problem = gaussian_problem(n, m, budget, rng);
    for (const CriterionKind kind :
         {CriterionKind::A, CriterionKind::I, CriterionKind::MV, CriterionKind::G}) {
      const CriterionSpec spec = CriterionSpec::preset(kind, problem);
      const OracleResult oracle = enumerate_best(problem, spec);
      const CovBounds bounds = combined_bounds(problem, spec, oracle.best);
      const SymMatrix sigma = invert(info_matrix(problem, oracle.best));
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
          worst_violation = std::max(worst_violation,
                                     std::max(bounds.lower(j, k) - sigma(j, k),
                                              sigma(j, k) - bounds.upper(j, k)));
        }
      }
      if (kind == CriterionKind::A) {
        for (int j = 0; j < m; ++j) {
          for (int k = 0; k < m; ++k) {
            const double expected = j == k ? bounds.alpha : bounds.alpha / 2;
            if (std::abs(bounds.upper(j, k) - expected) > 1e-12 * bounds.alpha) pass = false;
          }
        }
      }
      if (kind == CriterionKind::MV) {
        for (int j = 0; j < m; ++j) {
          for (int k = 0; k < m; ++k) {
            if (std::abs(bounds.upper(j, k) - bounds.alpha) > 1e-12 * bounds.alpha) pass = false;
          }
        }
      }
      ++checked;
    }
  }
  // The quadratic instance as well.
  const DesignProblem quad = quadratic_grid(31, 5);
  for (const CriterionKind kind :
       {CriterionKind::A, CriterionKind::I, CriterionKind::MV, CriterionKind::G}) {
    const CriterionSpec spec = CriterionSpec::preset(kind, quad);
    const OracleResult oracle = enumerate_best(quad, spec);
    const CovBounds bounds = combined_bounds(quad, spec, oracle.best);
    const SymMatrix sigma = invert(info_matrix(quad, oracle.best));
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        worst_violation = std::max(worst_violation,
                                   std::max(bounds.lower(j, k) - sigma(j, k),
                                            sigma(j, k) - bounds.upper(j, k)));
      }
    }
    ++checked;
  }
  pass = pass && worst_violation <= 1e-9;
  report(6, pass, "bound soundness on " + std::to_string(checked) +
                      " oracle-solved instances (worst overshoot " + fmt(worst_violation) +
                      "); A/MV closed forms exact");
}

// --------------------------------------------------------------------------
// 7. McCormick linkage: LP-feasible points with binary d satisfy
//    z_ijk = d_i c_jk within 1e-7 * (1 + |c_jk|).
void criterion7() {
  std::mt19937_64 rng(20240503);
  long sampled = 0;
  double worst = 0.0;
  while (sampled < 1000) {
    const int m = 2 + static_cast<int>(rng() % 2);
    const int n = m + 2 + static_cast<int>(rng() % 4);
    const int budget = m + static_cast<int>(rng() % 2);
    if (budget >= n) continue;
    const DesignProblem problem = gaussian_problem(n, m, budget, rng);
    const CriterionKind kind = rng() % 2 == 0 ? CriterionKind::A : CriterionKind::MV;
    const CriterionSpec spec = CriterionSpec::preset(kind, problem);
    OracleResult oracle{ExactDesign(std::vector<int>(n, 0), 0), 0.0, 0, 0, 0};
    try {
      oracle = enumerate_best(problem, spec);
    } catch (const NoFeasibleDesign&) {
      continue;
    }
    const CovBounds bounds = combined_bounds(problem, spec, oracle.best);
    const MilpModel model = build(problem, spec, bounds);

    // Sample binary designs, fix d in the LP and inspect the returned z.
    for (int draw = 0; draw < 50 && sampled < 1000; ++draw) {
      std::vector<int> counts(n, 0);
      int placed = 0;
      while (placed < budget) {
        const int i = static_cast<int>(rng() % n);
        if (counts[i] == 0) {
          counts[i] = 1;
          ++placed;
        }
      }
      std::vector<std::pair<int, double>> fixings;
      for (int i = 0; i < n; ++i) {
        fixings.emplace_back(model.layout.d_index(i), static_cast<double>(counts[i]));
      }
      const LpSolution lp = solve_lp(model, fixings);
      if (lp.status != LpStatus::Optimal) continue;  // Sigma outside the bounds
      ++sampled;
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < m; ++k) {
          for (int j = 0; j < m; ++j) {
            const double z = lp.primal[model.layout.z_index(i, j, k)];
            const double c = lp.primal[model.layout.c_index(j, k)];
            const double err = std::abs(z - counts[i] * c) / (1.0 + std::abs(c));
            worst = std::max(worst, err);
          }
        }
      }
    }
  }
  report(7, worst <= 1e-7,
         "McCormick linkage on " + std::to_string(sampled) +
             " LP-feasible binary points (worst scaled |z - d c| = " + fmt(worst) + ")");
}

// --------------------------------------------------------------------------
// 8. Export fidelity: golden-file byte equality on the tiny hand-built
//    model plus LP/MPS round-trip identity on 50 random design models.
void criterion8() {
  std::mt19937_64 rng(20240504);
  int round_trips = 0;
  bool pass = true;
  {
    const DesignProblem tiny({Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)}, 1);
    const CriterionSpec spec({DenseMatrix::Identity(1, 1)}, CriterionKind::A);
    const CovBounds bounds(SymMatrix::zero(1), SymMatrix::identity(1), 1.0);
    const std::string produced = write_model_string(build(tiny, spec, bounds), {});
    std::ifstream in(OPTEX_GOLDEN_LP, std::ios::binary);
    std::stringstream golden;
    golden << in.rdbuf();
    if (!in.good() && golden.str().empty()) pass = false;
    if (produced != golden.str()) pass = false;
  }
  for (int rep = 0; rep < 50; ++rep) {
    const int m = 2 + static_cast<int>(rng() % 2);
    const int n = m + 2 + static_cast<int>(rng() % 4);
    const int budget = std::min(n - 1, m + static_cast<int>(rng() % 2));
    const DesignProblem problem = gaussian_problem(n, m, budget, rng);
    const CriterionSpec spec = CriterionSpec::preset(
        rep % 2 == 0 ? CriterionKind::A : CriterionKind::G, problem);
    OracleResult oracle{ExactDesign(std::vector<int>(n, 0), 0), 0.0, 0, 0, 0};
    try {
      oracle = enumerate_best(problem, spec);
    } catch (const NoFeasibleDesign&) {
      continue;
    }
    const MilpModel model = build(problem, spec, combined_bounds(problem, spec, oracle.best));
    for (const ExportFormat format : {ExportFormat::LP, ExportFormat::MPS}) {
      ExportOptions options;
      options.format = format;
      const std::string text = write_model_string(model, options);
      const MilpModel parsed = parse_model_string(text, format);
      if (write_model_string(parsed, options) != text) pass = false;
      // Structural spot checks.
      if (parsed.num_vars != model.num_vars || parsed.eq.count() != model.eq.count() ||
          parsed.ge.count() != model.ge.count() || parsed.le.count() != model.le.count()) {
        pass = false;
      }
      ++round_trips;
    }
  }
  report(8, pass,
         "golden LP byte-equal; " + std::to_string(round_trips) + " LP/MPS round trips stable");
}

}  // namespace

int main() {
  const double t0 = now_sec();
  criterion1();
  const QuadraticResults quad = criterion2();
  criterion3();
  criterion4();
  criterion5(quad);
  criterion6();
  criterion7();
  criterion8();
  // Criterion 9: wall-clock sanity. Re-run the binary quadratic solves at
  // one thread and require each to certify within 30 minutes (the paper's
  // hardware-bound timings are not reproduction targets).
  {
    const DesignProblem problem = quadratic_grid(31, 5);
    bool pass = true;
    std::string detail;
    for (const CriterionKind kind :
         {CriterionKind::A, CriterionKind::I, CriterionKind::MV, CriterionKind::G}) {
      const CriterionSpec spec = CriterionSpec::preset(kind, problem);
      const SolveResult result = certified_solve(problem, spec);
      const bool ok = result.status == SolveStatus::Certified && result.wall_time_sec < 1800.0;
      pass = pass && ok;
      detail += to_string(kind) + "=" + fmt(result.wall_time_sec) + "s ";
    }
    report(9, pass, "binary quadratic solves certified at 1 thread within budget: " + detail);
  }
  std::printf("acceptance finished in %.1fs: %s\n", now_sec() - t0,
              failures == 0 ? "ALL PASS" : (std::to_string(failures) + " FAILURES").c_str());
  return failures == 0 ? 0 : 1;
}
