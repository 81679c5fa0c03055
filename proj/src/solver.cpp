#include "optex/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <queue>
#include <thread>

namespace optex {

namespace {

constexpr double kIntegralityTol = 1e-6;
constexpr double kGapTol = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double elapsed_sec(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Node {
  std::vector<int> lo, hi;  // per-group trial count bounds
  double bound;
  int depth;
  long id;
};

struct NodeOrder {
  // Min-heap on (bound, deeper first, lower id first).
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id > b.id;
  }
};

bool within_gap(double incumbent, double bound) {
  return incumbent - bound <= kGapTol * std::max(std::abs(incumbent), 1e-12);
}

struct GroupInfo {
  std::vector<int> first_var;  // index of the first copy in expanded space
  std::vector<int> size;
};

GroupInfo group_info(const MilpContext& ctx) {
  GroupInfo g;
  if (!ctx.expansion.has_value()) {
    const int n = ctx.problem.num_points();
    g.first_var.resize(n);
    g.size.assign(n, 1);
    for (int i = 0; i < n; ++i) g.first_var[i] = i;
    return g;
  }
  const ExpandedProblem& ex = *ctx.expansion;
  g.first_var.assign(ex.original_n, -1);
  g.size.assign(ex.original_n, 0);
  for (std::size_t e = 0; e < ex.origin.size(); ++e) {
    if (g.first_var[ex.origin[e]] < 0) g.first_var[ex.origin[e]] = static_cast<int>(e);
    ++g.size[ex.origin[e]];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Convex continuous-design bound.
//
// Over a node's box the integer designs are a subset of
//   T = { t : lo <= t <= hi, sum t = N },
// and t -> Phi_B(M(t)) is convex where M(t) is positive definite. A
// Frank-Wolfe sweep therefore yields certified lower bounds
//   f(t_k) + min_{s in T} grad(t_k)'(s - t_k)
// on the node's best achievable criterion value, independent of the
// McCormick relaxation (whose LP bound is weak at fractional nodes). The
// bound ignores user constraints, which only makes it smaller, never
// unsound.
class ConvexDesignBound {
 public:
  ConvexDesignBound(const MilpContext& ctx, const GroupInfo& groups)
      : m_(ctx.problem.dimension()) {
    const int ng = static_cast<int>(groups.size.size());
    outer_.reserve(ng);
    regressors_.reserve(ng);
    for (int g = 0; g < ng; ++g) {
      const Vector& f = ctx.problem.regressor(groups.first_var[g]);
      regressors_.push_back(f);
      outer_.push_back(f * f.transpose());
    }
    for (int l = 0; l < ctx.spec.num_blocks(); ++l) {
      gram_.push_back(ctx.spec.block(l) * ctx.spec.block(l).transpose());
    }
  }

  // Returns a valid lower bound on min Phi over integer designs in the box
  // (+inf when the box admits none with a nonsingular matrix). Stops early
  // once the bound reaches prune_target.
  //
  // For a single block the objective tr(G M(t)^{-1}) is smooth and the
  // Frank-Wolfe linearization certificates converge directly. For minimax
  // criteria the certificates use weak duality instead: for any lambda in
  // the simplex, max_l tr(G_l Sigma) >= tr(N(lambda) Sigma), so a certified
  // minimum of the smooth weighted problem bounds the minimax problem. The
  // lambda candidates come from the near-active blocks of an approximate
  // minimax solution.
  double lower_bound(const std::vector<int>& lo, const std::vector<int>& hi, int budget,
                     double prune_target) const {
    const int ng = static_cast<int>(lo.size());
    long lo_total = 0, hi_total = 0;
    for (int g = 0; g < ng; ++g) {
      lo_total += lo[g];
      hi_total += hi[g];
    }
    if (lo_total > budget || hi_total < budget) return kInf;

    // Rank precheck on the admissible support.
    DenseMatrix cap_info = DenseMatrix::Zero(m_, m_);
    for (int g = 0; g < ng; ++g) {
      if (hi[g] > 0) cap_info += hi[g] * outer_[g];
    }
    {
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(cap_info, Eigen::EigenvaluesOnly);
      if (!(es.eigenvalues().minCoeff() > 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff())) {
        return kInf;  // every design in the box is singular
      }
    }

    // Feasible interior start: lower bounds plus the residual budget spread
    // over the slack capacity.
    Vector t(ng);
    const double residual = static_cast<double>(budget - lo_total);
    const double slack = static_cast<double>(hi_total - lo_total);
    for (int g = 0; g < ng; ++g) {
      t(g) = lo[g] + (slack > 0.0 ? residual * (hi[g] - lo[g]) / slack : 0.0);
    }
    if (!std::isfinite(minimax_value(t))) return -kInf;

    if (gram_.size() == 1) {
      return certified_weighted_min(gram_[0], t, lo, hi, budget, prune_target, 400).first;
    }

    // Locate an approximate minimax solution, then certify against a few
    // weighted relaxations.
    t = minimax_descent(t, lo, hi, budget, 80);
    double best = -kInf;
    for (int round = 0; round < 2; ++round) {
      std::vector<double> traces = block_traces(t);
      const double vmax = *std::max_element(traces.begin(), traces.end());
      for (const double tau : {1e-3, 1e-2}) {
        DenseMatrix weighted = DenseMatrix::Zero(m_, m_);
        double total = 0.0;
        for (std::size_t l = 0; l < gram_.size(); ++l) {
          const double w = std::exp((traces[l] - vmax) / (tau * std::max(std::abs(vmax), 1e-12)));
          weighted += w * gram_[l];
          total += w;
        }
        weighted /= total;
        const auto [lb, minimizer] =
            certified_weighted_min(weighted, t, lo, hi, budget, prune_target, 300);
        best = std::max(best, lb);
        if (best >= prune_target) return best;
        if (round == 0) t = minimizer;
      }
    }
    return best;
  }

 private:
  // Inverse of M(t); empty when numerically singular.
  std::optional<DenseMatrix> inverse_info(const Vector& t) const {
    DenseMatrix m = DenseMatrix::Zero(m_, m_);
    for (int g = 0; g < static_cast<int>(outer_.size()); ++g) {
      if (t(g) != 0.0) m += t(g) * outer_[g];
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m);
    const Vector& ev = es.eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * ev.cwiseAbs().maxCoeff())) return std::nullopt;
    return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  }

  std::vector<double> block_traces(const Vector& t) const {
    const auto inv = inverse_info(t);
    std::vector<double> out(gram_.size(), kInf);
    if (!inv.has_value()) return out;
    for (std::size_t l = 0; l < gram_.size(); ++l) out[l] = (*inv * gram_[l]).trace();
    return out;
  }

  double minimax_value(const Vector& t) const {
    const auto inv = inverse_info(t);
    if (!inv.has_value()) return kInf;
    double best = -kInf;
    for (const DenseMatrix& g : gram_) best = std::max(best, (*inv * g).trace());
    return best;
  }

  // Greedy fill by ascending gradient: the exact linear minimizer over
  // { lo <= s <= hi, sum s = budget }.
  Vector linear_minimizer(const Vector& grad, const std::vector<int>& lo,
                          const std::vector<int>& hi, int budget) const {
    const int ng = static_cast<int>(lo.size());
    Vector s(ng);
    double fill = static_cast<double>(budget);
    std::vector<int> order(ng);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return grad(a) != grad(b) ? grad(a) < grad(b) : a < b; });
    for (int g = 0; g < ng; ++g) {
      s(g) = lo[g];
      fill -= lo[g];
    }
    for (int idx : order) {
      if (fill <= 0.0) break;
      const double add = std::min(fill, static_cast<double>(hi[idx] - lo[idx]));
      s(idx) += add;
      fill -= add;
    }
    return s;
  }

  // Subgradient Frank-Wolfe descent on the minimax objective; no
  // certificates, just a decent iterate.
  Vector minimax_descent(Vector t, const std::vector<int>& lo, const std::vector<int>& hi,
                         int budget, int iters) const {
    const int ng = static_cast<int>(lo.size());
    Vector grad(ng);
    for (int k = 0; k < iters; ++k) {
      const auto inv = inverse_info(t);
      if (!inv.has_value()) break;
      double best = -kInf;
      std::size_t best_l = 0;
      for (std::size_t l = 0; l < gram_.size(); ++l) {
        const double v = (*inv * gram_[l]).trace();
        if (v > best) {
          best = v;
          best_l = l;
        }
      }
      const DenseMatrix a = *inv * gram_[best_l] * *inv;
      for (int g = 0; g < ng; ++g) grad(g) = -regressors_[g].dot(a * regressors_[g]);
      const Vector s = linear_minimizer(grad, lo, hi, budget);
      const Vector dir = s - t;
      double best_gamma = 0.0;
      double best_f = minimax_value(t);
      for (const double gamma : {2.0 / (k + 2.0), 0.5, 0.25, 0.1, 0.05}) {
        const double f_try = minimax_value(t + gamma * dir);
        if (f_try < best_f) {
          best_f = f_try;
          best_gamma = gamma;
        }
      }
      if (best_gamma == 0.0) break;
      t += best_gamma * dir;
    }
    return t;
  }

  // Certified Frank-Wolfe minimization of the smooth weighted objective
  // tr(W M(t)^{-1}); returns the best linearization lower bound and the
  // final iterate.
  std::pair<double, Vector> certified_weighted_min(const DenseMatrix& weight, Vector t,
                                                   const std::vector<int>& lo,
                                                   const std::vector<int>& hi, int budget,
                                                   double prune_target, int max_iters) const {
    const int ng = static_cast<int>(lo.size());
    Vector grad(ng);
    double best_lb = -kInf;
    for (int k = 0; k < max_iters; ++k) {
      const auto inv = inverse_info(t);
      if (!inv.has_value()) break;
      const double f_t = (*inv * weight).trace();
      const DenseMatrix a = *inv * weight * *inv;
      for (int g = 0; g < ng; ++g) grad(g) = -regressors_[g].dot(a * regressors_[g]);
      const Vector s = linear_minimizer(grad, lo, hi, budget);
      const double gap = grad.dot(s - t);  // <= 0
      best_lb = std::max(best_lb, f_t + gap);
      if (best_lb >= prune_target) return {best_lb, t};
      if (-gap <= 1e-10 * (1.0 + std::abs(f_t))) return {best_lb, t};

      const Vector dir = s - t;
      double best_gamma = 0.0;
      double best_f = f_t;
      for (const double gamma : {2.0 / (k + 2.0), 1.0, 0.5, 0.25, 0.1, 0.05}) {
        const auto inv_try = inverse_info(t + gamma * dir);
        if (!inv_try.has_value()) continue;
        const double f_try = (*inv_try * weight).trace();
        if (f_try < best_f) {
          best_f = f_try;
          best_gamma = gamma;
        }
      }
      if (best_gamma == 0.0) return {best_lb, t};
      t += best_gamma * dir;
    }
    return {best_lb, t};
  }

  int m_;
  std::vector<Vector> regressors_;
  std::vector<DenseMatrix> outer_;
  std::vector<DenseMatrix> gram_;
};

// ---------------------------------------------------------------------------
// Node relaxations.
//
// The node LP is the LP relaxation of the expanded model under the node's
// copy fixings, built directly in the reduced space of undecided groups:
// decided trials fold into the information-identity rows as coefficients on
// c, and each free group g carries one total variable t_g in [lo, hi] and
// one aggregated z-block for its u = hi - lo undecided copies. Copies of a
// point are interchangeable, so averaging them maps expanded-feasible
// points onto aggregated-feasible ones of equal objective and back,
// making the two relaxations' optimal values identical.

MilpModel build_node_model(const MilpContext& ctx, const GroupInfo& groups,
                           const std::vector<int>& lo, const std::vector<int>& hi,
                           std::vector<int>* free_groups_out) {
  const int ng = static_cast<int>(lo.size());
  const int m = ctx.problem.dimension();
  const CovBounds& bounds = ctx.bounds;

  std::vector<int> free_groups;
  long decided_total = 0;
  DenseMatrix fixed_info = DenseMatrix::Zero(m, m);
  for (int g = 0; g < ng; ++g) {
    if (hi[g] > lo[g]) {
      free_groups.push_back(g);
    } else {
      decided_total += lo[g];
    }
    if (lo[g] > 0) {
      fixed_info += lo[g] * (ctx.problem.regressor(groups.first_var[g]) *
                             ctx.problem.regressor(groups.first_var[g]).transpose());
    }
  }
  const int nf = static_cast<int>(free_groups.size());

  VarLayout layout{nf, m};
  ModelBuilder b(layout.num_vars());

  for (int s = 0; s < nf; ++s) {
    const int g = free_groups[s];
    const double u = hi[g] - lo[g];
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        b.set_bounds(layout.z_index(s, j, k), u * std::min(0.0, bounds.lower(j, k)),
                     u * std::max(0.0, bounds.upper(j, k)));
      }
    }
    b.set_bounds(layout.d_index(s), lo[g], hi[g]);
  }
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) {
      b.set_bounds(layout.c_index(j, k), bounds.lower(j, k), bounds.upper(j, k));
    }
  }

  // Information identity with the decided trials folded onto c.
  std::vector<int> eq_rows(m * m);
  for (int q = 0; q < m; ++q) {
    for (int p = 0; p < m; ++p) eq_rows[p + q * m] = b.add_row(Sense::EQ, p == q ? 1.0 : 0.0);
  }
  for (int s = 0; s < nf; ++s) {
    const Vector& f = ctx.problem.regressor(groups.first_var[free_groups[s]]);
    for (int q = 0; q < m; ++q) {
      for (int p = 0; p < m; ++p) {
        for (int r = 0; r < m; ++r) {
          b.add_term(Sense::EQ, eq_rows[p + q * m], layout.z_index(s, r, q), f(p) * f(r));
        }
      }
    }
  }
  for (int q = 0; q < m; ++q) {
    for (int p = 0; p < m; ++p) {
      for (int r = 0; r < m; ++r) {
        b.add_term(Sense::EQ, eq_rows[p + q * m], layout.c_index(r, q), fixed_info(p, r));
      }
    }
  }

  // Aggregated McCormick rows for the undecided copies: with a = lo and
  // u = hi - lo, the z-sum zeta over free copies of the group satisfies
  //   zeta - L t        >= -a L       zeta - U t - u c >= -(a + u) U
  //   zeta - U t        <= -a U       zeta - L t - u c <= -(a + u) L
  // which is the exact sum of the per-copy inequalities.
  for (int s = 0; s < nf; ++s) {
    const int g = free_groups[s];
    const double a = lo[g];
    const double u = hi[g] - lo[g];
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        const double ljk = bounds.lower(j, k), ujk = bounds.upper(j, k);
        int row = b.add_row(Sense::GE, -a * ljk);
        b.add_term(Sense::GE, row, layout.z_index(s, j, k), 1.0);
        b.add_term(Sense::GE, row, layout.d_index(s), -ljk);

        row = b.add_row(Sense::GE, -(a + u) * ujk);
        b.add_term(Sense::GE, row, layout.z_index(s, j, k), 1.0);
        b.add_term(Sense::GE, row, layout.d_index(s), -ujk);
        b.add_term(Sense::GE, row, layout.c_index(j, k), -u);

        row = b.add_row(Sense::LE, -a * ujk);
        b.add_term(Sense::LE, row, layout.z_index(s, j, k), 1.0);
        b.add_term(Sense::LE, row, layout.d_index(s), -ujk);

        row = b.add_row(Sense::LE, -(a + u) * ljk);
        b.add_term(Sense::LE, row, layout.z_index(s, j, k), 1.0);
        b.add_term(Sense::LE, row, layout.d_index(s), -ljk);
        b.add_term(Sense::LE, row, layout.c_index(j, k), -u);
      }
    }
  }

  {
    const int row =
        b.add_row(Sense::EQ, static_cast<double>(ctx.problem.run_budget() - decided_total));
    for (int s = 0; s < nf; ++s) b.add_term(Sense::EQ, row, layout.d_index(s), 1.0);
  }

  for (int l = 0; l < ctx.spec.num_blocks(); ++l) {
    const DenseMatrix gmat = ctx.spec.block(l) * ctx.spec.block(l).transpose();
    const int row = b.add_row(Sense::GE, 0.0);
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) b.add_term(Sense::GE, row, layout.c_index(j, k), -gmat(j, k));
    }
    b.add_term(Sense::GE, row, layout.phi_index(), 1.0);
  }

  std::vector<int> slot_of(ng, -1);
  for (int s = 0; s < nf; ++s) slot_of[free_groups[s]] = s;
  for (const ExtraConstraint& c : ctx.extras_original) {
    switch (c.kind) {
      case ExtraConstraint::Kind::Augmentation:
        break;  // already part of the boxes
      case ExtraConstraint::Kind::DesignLinear: {
        double rhs = c.rhs;
        std::vector<std::pair<int, double>> terms;
        for (std::size_t i = 0; i < c.indices.size(); ++i) {
          const int g = c.indices[i];
          if (slot_of[g] >= 0) {
            terms.emplace_back(layout.d_index(slot_of[g]), c.coeffs[i]);
          } else {
            rhs -= c.coeffs[i] * lo[g];
          }
        }
        const int row = b.add_row(c.sense, rhs);
        for (const auto& [var, val] : terms) b.add_term(c.sense, row, var, val);
        break;
      }
      case ExtraConstraint::Kind::CovarianceLinear: {
        const int row = b.add_row(c.sense, c.rhs);
        for (std::size_t i = 0; i < c.entries.size(); ++i) {
          b.add_term(c.sense, row, layout.c_index(c.entries[i].first, c.entries[i].second),
                     c.coeffs[i]);
        }
        break;
      }
    }
  }

  b.set_objective(layout.phi_index(), 1.0);
  if (free_groups_out != nullptr) *free_groups_out = free_groups;
  return b.finalize(layout);
}

NodeRelaxation solve_node_lp(const MilpContext& ctx, const GroupInfo& groups,
                             const std::vector<int>& lo, const std::vector<int>& hi,
                             LpWorkspace* ws) {
  const int ng = static_cast<int>(lo.size());
  NodeRelaxation out;
  std::vector<int> free_groups;
  const MilpModel node_model = build_node_model(ctx, groups, lo, hi, &free_groups);

  LpSolution lp;
  try {
    lp = solve_lp(node_model, {}, {}, ws);
  } catch (const IterationLimit&) {
    LpOptions retry;
    retry.bland_from_start = true;
    retry.iteration_limit_factor = 100;
    lp = solve_lp(node_model, {}, retry, ws);
  }
  out.status = lp.status;
  out.objective = lp.objective;
  out.pivots = lp.pivots;
  if (lp.status == LpStatus::Optimal) {
    out.totals.assign(ng, 0.0);
    for (int g = 0; g < ng; ++g) out.totals[g] = lo[g];
    for (std::size_t s = 0; s < free_groups.size(); ++s) {
      out.totals[free_groups[s]] = lp.primal[node_model.layout.d_index(static_cast<int>(s))];
    }
    const int m = ctx.problem.dimension();
    out.covariance.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        out.covariance[static_cast<std::size_t>(k) * m + j] =
            lp.primal[node_model.layout.c_index(j, k)];
      }
    }
  }
  return out;
}

// Canonical expanded counts for integer group totals: the first t copies of
// each group take one trial.
std::vector<int> expanded_counts(const MilpContext& ctx, const GroupInfo& groups,
                                 const std::vector<int>& totals) {
  std::vector<int> counts(ctx.problem.num_points(), 0);
  for (std::size_t g = 0; g < totals.size(); ++g) {
    for (int s = 0; s < totals[g]; ++s) counts[groups.first_var[g] + s] = 1;
  }
  return counts;
}

struct Incumbent {
  std::vector<int> expanded;  // binary counts in expanded space
  double value;
};

struct SharedState {
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::optional<Incumbent> incumbent;
  long nodes_explored = 0;
  long lp_pivots = 0;
  long next_id = 1;
  int in_flight = 0;
  bool limit_hit = false;
  bool root_infeasible = false;
  std::exception_ptr failure;
  std::mutex mutex;
  std::condition_variable cv;
};

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Certified: return "certified";
    case SolveStatus::TimeLimit: return "time_limit";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "?";
}

MilpContext make_context(const DesignProblem& problem, const CriterionSpec& spec,
                         const CovBounds& bounds, std::vector<ExtraConstraint> extras) {
  MilpModel model = build(problem, spec, bounds, extras);
  return MilpContext{problem, spec, bounds, extras, std::move(extras), std::move(model),
                     std::nullopt};
}

MilpContext make_context_replicated(const DesignProblem& problem, const std::vector<int>& caps,
                                    const CriterionSpec& spec, const CovBounds& bounds,
                                    std::vector<ExtraConstraint> extras) {
  ExpandedProblem expanded = expand_replications(problem, caps);
  std::vector<ExtraConstraint> translated = expanded.translate(extras);
  MilpModel model = build(expanded.problem, spec, bounds, translated);
  return MilpContext{expanded.problem, spec,        bounds,          std::move(translated),
                     std::move(extras), std::move(model), std::move(expanded)};
}

std::optional<int> branching_choice(const LpSolution& lp, const MilpModel& model) {
  const VarLayout& layout = model.layout;
  int best = -1;
  double best_frac = kIntegralityTol;
  for (int i = 0; i < layout.n; ++i) {
    const double v = lp.primal[layout.d_index(i)];
    const double frac = std::abs(v - std::round(v));
    if (frac > best_frac) {
      best_frac = frac;
      best = i;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

NodeRelaxation solve_node_relaxation(const MilpContext& context, const std::vector<int>& lo,
                                     const std::vector<int>& hi, LpWorkspace* workspace) {
  const GroupInfo groups = group_info(context);
  if (lo.size() != groups.size.size() || hi.size() != groups.size.size()) {
    throw DimensionMismatch("node bounds must have one entry per copy group");
  }
  LpWorkspace local;
  return solve_node_lp(context, groups, lo, hi, workspace != nullptr ? workspace : &local);
}

MilpModel node_relaxation_model(const MilpContext& context, const std::vector<int>& lo,
                                const std::vector<int>& hi, std::vector<int>* free_groups_out) {
  const GroupInfo groups = group_info(context);
  if (lo.size() != groups.size.size() || hi.size() != groups.size.size()) {
    throw DimensionMismatch("node bounds must have one entry per copy group");
  }
  return build_node_model(context, groups, lo, hi, free_groups_out);
}

SolveResult solve(const MilpContext& ctx, const std::optional<ExactDesign>& incumbent,
                  const SolveLimits& limits) {
  const auto start = Clock::now();
  const GroupInfo groups = group_info(ctx);
  const int ng = static_cast<int>(groups.size.size());
  const ConvexDesignBound convex(ctx, groups);

  SharedState st;

  if (incumbent.has_value()) {
    if (incumbent->num_points() != ctx.problem.num_points() || !incumbent->is_binary()) {
      throw SchemaError("incumbent must be a binary design on the model's design points");
    }
    const std::vector<double> x = embed_design(ctx.model, ctx.problem, ctx.spec, *incumbent);
    if (ctx.model.max_row_violation(x) > 1e-7 || ctx.model.max_bound_violation(x) > 1e-7) {
      throw SchemaError("incumbent design is infeasible for the assembled model");
    }
    const double value = criterion_value(ctx.spec, info_matrix(ctx.problem, *incumbent));
    st.incumbent = Incumbent{incumbent->counts(), value};
  }

  // Root group bounds from the model's variable bounds (captures
  // augmentation fixings).
  Node root;
  root.lo.assign(ng, 0);
  root.hi.assign(ng, 0);
  for (int g = 0; g < ng; ++g) {
    int lo = 0, hi = 0;
    for (int s = 0; s < groups.size[g]; ++s) {
      const int var = ctx.model.layout.d_index(groups.first_var[g] + s);
      lo += static_cast<int>(std::lround(ctx.model.var_lower[var]));
      hi += static_cast<int>(std::lround(ctx.model.var_upper[var]));
    }
    root.lo[g] = lo;
    root.hi[g] = hi;
  }
  root.bound = -kInf;
  root.depth = 0;
  root.id = 0;
  st.open.push(std::move(root));

  auto prune_target = [&](const SharedState& s) {
    return s.incumbent.has_value()
               ? s.incumbent->value -
                     kGapTol * std::max(std::abs(s.incumbent->value), 1e-12)
               : kInf;
  };

  auto worker = [&](int /*worker_id*/) {
    LpWorkspace workspace;
    std::unique_lock<std::mutex> lock(st.mutex);
    while (true) {
      st.cv.wait(lock, [&] {
        return st.failure || st.limit_hit || !st.open.empty() || st.in_flight == 0;
      });
      if (st.failure || st.limit_hit) return;
      if (st.open.empty()) {
        if (st.in_flight == 0) return;
        continue;
      }
      if (elapsed_sec(start) > limits.time_limit_sec || st.nodes_explored >= limits.node_limit) {
        st.limit_hit = true;
        st.cv.notify_all();
        return;
      }
      Node node = st.open.top();
      st.open.pop();
      if (st.incumbent.has_value() && within_gap(st.incumbent->value, node.bound)) {
        continue;  // bound raced past the incumbent
      }
      ++st.in_flight;
      ++st.nodes_explored;
      const long node_number = st.nodes_explored;
      const double target = prune_target(st);
      const bool is_root = node.depth == 0;
      lock.unlock();

      std::optional<std::exception_ptr> error;
      NodeRelaxation lp;
      double node_bound = node.bound;
      bool pruned_by_convex = false;
      bool lp_failed = false;
      try {
        const double convex_bound = convex.lower_bound(node.lo, node.hi,
                                                       ctx.problem.run_budget(), target);
        node_bound = std::max(node_bound, convex_bound);
        if (node_bound >= target) {
          pruned_by_convex = true;
        } else {
          try {
            lp = solve_node_lp(ctx, groups, node.lo, node.hi, &workspace);
            node_bound = std::max(node_bound, lp.objective);
          } catch (const IterationLimit&) {
            lp_failed = true;  // keep the node alive on the convex bound alone
          }
        }
      } catch (...) {
        error = std::current_exception();
      }

      lock.lock();
      --st.in_flight;
      st.lp_pivots += lp.pivots;
      if (error.has_value()) {
        st.failure = *error;
        st.cv.notify_all();
        return;
      }
      if (node_number % 1000 == 0) {
        const double inc = st.incumbent ? st.incumbent->value
                                        : std::numeric_limits<double>::quiet_NaN();
        const double bound = st.open.empty() ? node_bound : st.open.top().bound;
        const double gap = st.incumbent
                               ? std::max(0.0, (st.incumbent->value - bound) /
                                                   std::max(std::abs(st.incumbent->value), 1e-12))
                               : std::numeric_limits<double>::quiet_NaN();
        std::fprintf(stderr, "optex: nodes=%ld incumbent=%.9g bound=%.9g gap=%.3g elapsed=%.1fs\n",
                     node_number, inc, bound, gap, elapsed_sec(start));
      }
      if (pruned_by_convex) {
        st.cv.notify_all();
        continue;
      }
      if (lp_failed) {
        // The relaxation could not be solved; branch on the first undecided
        // group (or score the fully decided design directly) so no region
        // is lost.
        int free_g = -1;
        for (int g = 0; g < ng; ++g) {
          if (node.hi[g] > node.lo[g]) {
            free_g = g;
            break;
          }
        }
        if (free_g < 0) {
          const std::vector<int> counts = expanded_counts(ctx, groups, node.lo);
          try {
            const ExactDesign design(counts, ctx.problem.run_budget());
            const SymMatrix info = info_matrix(ctx.problem, design);
            if (is_nonsingular(info)) {
              const SymMatrix sigma = invert(info);
              if (satisfies_constraints(ctx.extras, counts, &sigma, 1e-9)) {
                const double direct = criterion_value(ctx.spec, info);
                if (!st.incumbent.has_value() || direct < st.incumbent->value) {
                  st.incumbent = Incumbent{counts, direct};
                }
              }
            }
          } catch (const Error&) {
            // infeasible corner; nothing to record
          }
        } else {
          Node down = node;
          down.hi[free_g] = node.lo[free_g];
          down.bound = node_bound;
          down.depth = node.depth + 1;
          down.id = st.next_id++;
          Node up = node;
          up.lo[free_g] = node.lo[free_g] + 1;
          up.bound = node_bound;
          up.depth = node.depth + 1;
          up.id = st.next_id++;
          st.open.push(std::move(down));
          st.open.push(std::move(up));
        }
        st.cv.notify_all();
        continue;
      }
      if (lp.status == LpStatus::Infeasible) {
        if (is_root) st.root_infeasible = true;
        st.cv.notify_all();
        continue;
      }
      if (lp.status == LpStatus::Unbounded) {
        st.failure = std::make_exception_ptr(
            Error("node relaxation unbounded; covariance bounds are not finite"));
        st.cv.notify_all();
        return;
      }
      if (st.incumbent.has_value() && within_gap(st.incumbent->value, node_bound)) {
        st.cv.notify_all();
        continue;
      }

      // Branching target: most fractional group total, ties to the lowest
      // index; with all totals integral, the first group whose free copies
      // sit strictly between their corners.
      int frac_group = -1;
      double best_frac = kIntegralityTol;
      for (int g = 0; g < ng; ++g) {
        const double frac = std::abs(lp.totals[g] - std::round(lp.totals[g]));
        if (frac > best_frac) {
          best_frac = frac;
          frac_group = g;
        }
      }
      int interior_group = -1;
      if (frac_group < 0) {
        for (int g = 0; g < ng; ++g) {
          const int r = static_cast<int>(std::lround(lp.totals[g]));
          if (r > node.lo[g] && r < node.hi[g]) {
            interior_group = g;
            break;
          }
        }
      }

      if (frac_group < 0 && interior_group < 0) {
        // Integer point at a group corner: a genuine design. Its direct
        // criterion value must agree with the relaxation objective; a
        // mismatch means the McCormick linkage is broken.
        std::vector<int> totals(ng);
        for (int g = 0; g < ng; ++g) totals[g] = static_cast<int>(std::lround(lp.totals[g]));
        const std::vector<int> counts = expanded_counts(ctx, groups, totals);
        const ExactDesign design(counts, ctx.problem.run_budget());
        double direct;
        try {
          direct = criterion_value(ctx.spec, info_matrix(ctx.problem, design));
        } catch (const SingularInformation&) {
          st.failure = std::make_exception_ptr(Error(
              "relaxation returned an integral design with singular information matrix"));
          st.cv.notify_all();
          return;
        }
        if (std::abs(direct - lp.objective) > 1e-6 * (1.0 + std::abs(direct))) {
          st.failure = std::make_exception_ptr(
              Error("solver/objective mismatch at integral node: direct=" +
                    std::to_string(direct) + " lp=" + std::to_string(lp.objective)));
          st.cv.notify_all();
          return;
        }
        // The relaxation never constrains c's symmetry explicitly; at
        // integral points the rows determine it, so asymmetry beyond
        // tolerance flags a broken linkage.
        {
          const int m = ctx.problem.dimension();
          double asym = 0.0, scale = 1.0;
          for (int k = 0; k < m; ++k) {
            for (int j = 0; j < m; ++j) {
              const double cjk = lp.covariance[static_cast<std::size_t>(k) * m + j];
              const double ckj = lp.covariance[static_cast<std::size_t>(j) * m + k];
              asym = std::max(asym, std::abs(cjk - ckj));
              scale = std::max(scale, std::abs(cjk));
            }
          }
          if (asym > 1e-7 * scale) {
            st.failure = std::make_exception_ptr(Error(
                "asymmetric covariance block at integral node (max " + std::to_string(asym) +
                ")"));
            st.cv.notify_all();
            return;
          }
        }
        if (!st.incumbent.has_value() || direct < st.incumbent->value) {
          st.incumbent = Incumbent{counts, direct};
        }
        st.cv.notify_all();
        continue;
      }

      const int g = frac_group >= 0 ? frac_group : interior_group;
      const int split = frac_group >= 0 ? static_cast<int>(std::floor(lp.totals[g]))
                                        : static_cast<int>(std::lround(lp.totals[g]));
      // Down branch (fewer trials) first.
      Node down = node;
      down.hi[g] = std::max(split, node.lo[g]);
      down.bound = node_bound;
      down.depth = node.depth + 1;
      down.id = st.next_id++;
      Node up = node;
      up.lo[g] = std::min(split + 1, node.hi[g]);
      up.bound = node_bound;
      up.depth = node.depth + 1;
      up.id = st.next_id++;
      st.open.push(std::move(down));
      st.open.push(std::move(up));
      st.cv.notify_all();
    }
  };

  const int threads = std::max(1, limits.threads);
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (std::thread& t : pool) t.join();
  }

  if (st.failure) std::rethrow_exception(st.failure);

  const double wall = elapsed_sec(start);
  if (st.root_infeasible && !st.incumbent.has_value()) {
    throw NoFeasibleDesign("root relaxation infeasible: contradictory constraints");
  }
  if (!st.incumbent.has_value()) {
    throw Error("search ended without any feasible design (limits too tight?)");
  }

  double residual_bound = st.incumbent->value;
  if (st.limit_hit && !st.open.empty()) residual_bound = st.open.top().bound;
  const double gap = std::max(
      0.0, (st.incumbent->value - residual_bound) / std::max(std::abs(st.incumbent->value), 1e-12));

  const ExactDesign expanded_design(st.incumbent->expanded, ctx.problem.run_budget());
  const SymMatrix sigma = invert(info_matrix(ctx.problem, expanded_design));
  const double value = criterion_value(ctx.spec, info_matrix(ctx.problem, expanded_design));

  std::vector<int> folded = ctx.expansion.has_value()
                                ? ctx.expansion->fold(st.incumbent->expanded)
                                : st.incumbent->expanded;
  SolveResult result{ExactDesign(folded, ctx.problem.run_budget()),
                     value,
                     sigma,
                     st.limit_hit ? SolveStatus::TimeLimit : SolveStatus::Certified,
                     st.nodes_explored,
                     st.limit_hit ? gap : 0.0,
                     st.lp_pivots,
                     wall};
  return result;
}

}  // namespace optex
