#include "optex/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace optex {

long count_designs(int n, int budget, const std::vector<int>& caps) {
  // DP over points; saturate at a sentinel to avoid overflow.
  const long kSat = std::numeric_limits<long>::max() / 2;
  std::vector<long> ways(budget + 1, 0);
  ways[0] = 1;
  for (int i = 0; i < n; ++i) {
    const int cap = caps.empty() ? 1 : std::min(caps[i], budget);
    std::vector<long> next(budget + 1, 0);
    for (int s = 0; s <= budget; ++s) {
      if (ways[s] == 0) continue;
      for (int c = 0; c <= cap && s + c <= budget; ++c) {
        next[s + c] = std::min(kSat, next[s + c] + ways[s]);
      }
    }
    ways = std::move(next);
  }
  return ways[budget];
}

namespace {

struct Search {
  const DesignProblem& problem;
  const CriterionSpec& spec;
  const std::vector<ExtraConstraint>& extras;
  const std::vector<int>& caps;
  bool need_sigma;

  std::vector<int> counts = {};
  DenseMatrix info = {};
  long since_rebuild = 0;

  std::vector<int> best_counts = {};
  double best_value = std::numeric_limits<double>::infinity();
  bool have_best = false;
  long examined = 0;
  long constraint_rejected = 0;
  long singular_rejected = 0;

  void rebuild_info() {
    const int m = problem.dimension();
    info.setZero(m, m);
    for (int i = 0; i < problem.num_points(); ++i) {
      if (counts[i] > 0) {
        info.noalias() += counts[i] * (problem.regressor(i) * problem.regressor(i).transpose());
      }
    }
  }

  void evaluate_leaf() {
    // Design rows never need Sigma; reject on them first.
    for (const ExtraConstraint& c : extras) {
      if (c.kind != ExtraConstraint::Kind::CovarianceLinear) {
        if (!sense_holds(c.sense, design_row_value(c, counts), c.rhs, 1e-9)) {
          ++constraint_rejected;
          return;
        }
      }
    }
    if (++since_rebuild >= 64) {
      rebuild_info();
      since_rebuild = 0;
    }
    ++examined;
    SymMatrix m(info);
    if (!is_nonsingular(m)) {
      ++singular_rejected;
      return;
    }
    double value = 0.0;
    if (need_sigma) {
      SymMatrix sigma = invert(m);
      for (const ExtraConstraint& c : extras) {
        if (c.kind == ExtraConstraint::Kind::CovarianceLinear) {
          if (!sense_holds(c.sense, covariance_row_value(c, sigma), c.rhs, 1e-9)) {
            --examined;
            ++constraint_rejected;
            return;
          }
        }
      }
      value = psi_value(spec, sigma);
    } else {
      value = criterion_value(spec, m);
    }
    if (!have_best || value < best_value) {
      have_best = true;
      best_value = value;
      best_counts = counts;
    }
  }

  void recurse(int i, int remaining) {
    const int n = problem.num_points();
    if (i == n) {
      if (remaining == 0) evaluate_leaf();
      return;
    }
    // Capacity pruning keeps the walk linear in the number of leaves.
    long tail_capacity = 0;
    for (int t = i; t < n; ++t) {
      tail_capacity += caps.empty() ? 1 : caps[t];
      if (tail_capacity >= remaining) break;
    }
    if (tail_capacity < remaining) return;

    const int cap = std::min(caps.empty() ? 1 : caps[i], remaining);
    const Vector& f = problem.regressor(i);
    for (int c = 0; c <= cap; ++c) {
      if (c > 0) info.noalias() += f * f.transpose();
      counts[i] = c;
      recurse(i + 1, remaining - c);
    }
    info.noalias() -= cap * (f * f.transpose());
    counts[i] = 0;
  }
};

}  // namespace

OracleResult enumerate_best(const DesignProblem& problem, const CriterionSpec& spec,
                            const std::vector<ExtraConstraint>& extras,
                            const std::vector<int>& caps, const OracleConfig& config) {
  const int n = problem.num_points();
  if (!caps.empty() && static_cast<int>(caps.size()) != n) {
    throw DimensionMismatch("caps length differs from the number of design points");
  }
  for (const ExtraConstraint& c : extras) c.validate(n, problem.dimension());

  const long total = count_designs(n, problem.run_budget(), caps);
  if (total > config.max_designs) {
    throw TooLarge("enumeration of " + std::to_string(total) + " designs exceeds the cap of " +
                   std::to_string(config.max_designs));
  }

  Search s{problem, spec, extras, caps, has_covariance_rows(extras)};
  s.counts.assign(n, 0);
  s.info.setZero(problem.dimension(), problem.dimension());
  s.recurse(0, problem.run_budget());

  if (!s.have_best) {
    throw NoFeasibleDesign("no feasible nonsingular design exists under the given constraints");
  }
  OracleResult result{ExactDesign(s.best_counts, problem.run_budget()), s.best_value, s.examined,
                      s.constraint_rejected, s.singular_rejected};
  return result;
}

}  // namespace optex
