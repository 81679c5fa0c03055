#include "optex/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace optex {

namespace {

constexpr double kImproveTol = 1e-12;

// Exchange objective: the criterion itself, except for the G preset where a
// log-det surrogate drives the swaps (D- and G-optimal designs tend to be
// close, and the surrogate is far cheaper to improve).
double exchange_objective(const CriterionSpec& spec, const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.mat(), Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-10 * ev.cwiseAbs().maxCoeff())) {
    throw SingularInformation("singular information matrix in exchange objective");
  }
  if (spec.kind() == CriterionKind::G) {
    return -ev.array().log().sum();
  }
  return criterion_value(spec, m);
}

struct Candidate {
  std::vector<int> counts;
  double objective;
};

bool feasible(const DesignProblem& problem, const std::vector<ExtraConstraint>& extras,
              const std::vector<int>& counts, SymMatrix* info_out) {
  SymMatrix m = info_matrix(problem, ExactDesign(counts, problem.run_budget()));
  if (!is_nonsingular(m)) return false;
  if (!extras.empty()) {
    if (has_covariance_rows(extras)) {
      SymMatrix sigma = invert(m);
      if (!satisfies_constraints(extras, counts, &sigma)) return false;
    } else if (!satisfies_constraints(extras, counts, nullptr)) {
      return false;
    }
  }
  if (info_out != nullptr) *info_out = m;
  return true;
}

// Deterministic fallback start: QR column pivoting picks m independent
// regressors, the remaining budget fills with the lowest unused indices.
std::vector<int> pivot_start(const DesignProblem& problem) {
  const int n = problem.num_points();
  const int m = problem.dimension();
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(problem.regressor_matrix());
  std::vector<int> counts(n, 0);
  int placed = 0;
  for (int t = 0; t < m; ++t) {
    counts[qr.colsPermutation().indices()(t)] = 1;
    ++placed;
  }
  for (int i = 0; i < n && placed < problem.run_budget(); ++i) {
    if (counts[i] == 0) {
      counts[i] = 1;
      ++placed;
    }
  }
  return counts;
}

}  // namespace

ExactDesign exchange_search(const DesignProblem& problem, const CriterionSpec& spec,
                            const HeuristicConfig& config,
                            const std::vector<ExtraConstraint>& extras, ExchangeTrace* trace) {
  if (config.restarts < 1 || config.max_passes < 1) {
    throw SchemaError("heuristic needs restarts >= 1 and max_passes >= 1");
  }
  const int n = problem.num_points();
  const int budget = problem.run_budget();
  for (const ExtraConstraint& c : extras) c.validate(n, problem.dimension());
  if (trace != nullptr) trace->clear();

  const long draw_budget = static_cast<long>(config.restarts) * 1000;
  long draws = 0;
  long consecutive_failures = 0;
  bool tried_pivot_fallback = false;

  std::optional<Candidate> best;
  std::vector<int> base(n);
  for (int i = 0; i < n; ++i) base[i] = i;

  for (int restart = 0; restart < config.restarts; ++restart) {
    std::mt19937_64 rng(config.rng_seed + static_cast<unsigned long>(restart));

    // Find a feasible nonsingular start.
    std::optional<std::vector<int>> start;
    while (!start.has_value()) {
      if (draws >= draw_budget) break;
      ++draws;
      std::vector<int> order = base;
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<int> counts(n, 0);
      for (int t = 0; t < budget; ++t) counts[order[t]] = 1;
      if (feasible(problem, extras, counts, nullptr)) {
        start = std::move(counts);
        consecutive_failures = 0;
      } else if (++consecutive_failures >= 100 && extras.empty() && !tried_pivot_fallback) {
        tried_pivot_fallback = true;
        std::vector<int> counts2 = pivot_start(problem);
        if (feasible(problem, extras, counts2, nullptr)) start = std::move(counts2);
      }
    }
    if (!start.has_value()) {
      if (best.has_value()) break;
      throw NoFeasibleStart("no feasible nonsingular start found in " + std::to_string(draws) +
                            " random draws");
    }

    std::vector<int> counts = *start;
    double objective =
        exchange_objective(spec, info_matrix(problem, ExactDesign(counts, budget)));
    std::vector<double> history{objective};

    for (int pass = 0; pass < config.max_passes; ++pass) {
      int best_out = -1, best_in = -1;
      double best_obj = objective;
      for (int i = 0; i < n; ++i) {
        if (counts[i] == 0) continue;
        for (int j = 0; j < n; ++j) {
          if (counts[j] != 0) continue;
          std::vector<int> swapped = counts;
          --swapped[i];
          ++swapped[j];
          SymMatrix m = info_matrix(problem, ExactDesign(swapped, budget));
          if (!is_nonsingular(m)) continue;
          if (!extras.empty()) {
            if (has_covariance_rows(extras)) {
              SymMatrix sigma = invert(m);
              if (!satisfies_constraints(extras, swapped, &sigma)) continue;
            } else if (!satisfies_constraints(extras, swapped, nullptr)) {
              continue;
            }
          }
          const double obj = exchange_objective(spec, m);
          if (obj < best_obj - kImproveTol) {
            best_obj = obj;
            best_out = i;
            best_in = j;
          }
        }
      }
      if (best_out < 0) break;
      --counts[best_out];
      ++counts[best_in];
      objective = best_obj;
      history.push_back(objective);
    }

    if (trace != nullptr) trace->push_back(std::move(history));
    if (!best.has_value() || objective < best->objective ||
        (objective == best->objective && counts < best->counts)) {
      best = Candidate{counts, objective};
    }
  }

  return ExactDesign(best->counts, budget);
}

}  // namespace optex
