#include "optex/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

namespace optex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState { Basic, AtLower, AtUpper, Interior };

// Bounded-variable primal simplex on a dense tableau. Column layout:
// structural variables, then one slack per row (equality slacks fixed to
// zero), then phase-1 artificials. The tableau holds B^{-1}A in rows [0, R)
// and the reduced-cost row at index R; basic values live in a separate
// vector. Rows and structural columns are equilibrated (geometric scaling,
// two sweeps) before the solve so that pivot magnitudes stay comparable.
class Simplex {
 public:
  Simplex(const MilpModel& model, const std::vector<std::pair<int, double>>& fixings,
          const LpOptions& options, LpWorkspace* workspace)
      : model_(model), options_(options), owned_(workspace == nullptr ? new LpWorkspace : nullptr),
        ws_(workspace == nullptr ? owned_.get() : workspace) {
    num_rows_ = model.num_rows();
    num_struct_ = model.num_vars;
    num_total_ = num_struct_ + num_rows_ + num_rows_;  // slacks + artificial slots
    lower_.assign(num_total_, 0.0);
    upper_.assign(num_total_, 0.0);
    for (int v = 0; v < num_struct_; ++v) {
      lower_[v] = model.var_lower[v];
      upper_[v] = model.var_upper[v];
    }
    for (const auto& [var, value] : fixings) {
      lower_[var] = value;
      upper_[var] = value;
    }
    for (int v = 0; v < num_total_; ++v) {
      if (lower_[v] > upper_[v] + 1e-12) contradictory_ = true;
    }
    compute_scaling();
  }

  LpSolution run() {
    LpSolution out;
    if (contradictory_) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    build_tableau();
    if (!phase1()) {
      out.status = LpStatus::Infeasible;
      out.pivots = pivots_;
      return out;
    }
    const bool bounded = phase2();
    out.pivots = pivots_;
    if (!bounded) {
      out.status = LpStatus::Unbounded;
      return out;
    }
    out.status = LpStatus::Optimal;
    out.primal.assign(num_struct_, 0.0);
    for (int v = 0; v < num_struct_; ++v) out.primal[v] = value_of(v) * col_scale_[v];
    out.objective = model_.objective_value(out.primal);
    const double viol = model_.max_row_violation(out.primal);
    if (viol > options_.feas_tol) {
      throw IterationLimit("simplex returned a primal point violating rows by " +
                           std::to_string(viol));
    }
    return out;
  }

 private:
  // Geometric equilibration of rows and structural columns.
  void compute_scaling() {
    row_scale_.assign(num_rows_, 1.0);
    col_scale_.assign(num_struct_, 1.0);
    for (int sweep = 0; sweep < 2; ++sweep) {
      std::vector<double> row_max(num_rows_, 0.0);
      for_each_entry([&](int r, int v, double a) {
        row_max[r] = std::max(row_max[r], std::abs(a) * row_scale_[r] * col_scale_[v]);
      });
      for (int r = 0; r < num_rows_; ++r) {
        if (row_max[r] > 0.0) row_scale_[r] /= std::sqrt(row_max[r]);
      }
      std::vector<double> col_max(num_struct_, 0.0);
      for_each_entry([&](int r, int v, double a) {
        col_max[v] = std::max(col_max[v], std::abs(a) * row_scale_[r] * col_scale_[v]);
      });
      for (int v = 0; v < num_struct_; ++v) {
        if (col_max[v] > 0.0) col_scale_[v] /= std::sqrt(col_max[v]);
      }
    }
    // Scale variable bounds into the solver's working space.
    for (int v = 0; v < num_struct_; ++v) {
      lower_[v] /= col_scale_[v];
      upper_[v] /= col_scale_[v];
    }
  }

  template <typename Fn>
  void for_each_entry(Fn&& fn) const {
    int r = 0;
    for (const SparseRows* rows : {&model_.eq, &model_.ge, &model_.le}) {
      for (int i = 0; i < rows->count(); ++i, ++r) {
        for (const auto& [col, val] : rows->entries[i]) fn(r, col, val);
      }
    }
  }

  double value_of(int v) const {
    if (state_[v] == VarState::Basic) return ws_->xb[row_of_[v]];
    return nb_value_[v];
  }

  void build_tableau() {
    DenseMatrix& tab = ws_->tableau;
    tab.setZero(num_rows_ + 1, num_total_);
    ws_->xb.assign(num_rows_, 0.0);
    ws_->basis.assign(num_rows_, -1);
    state_.assign(num_total_, VarState::AtLower);
    row_of_.assign(num_total_, -1);
    nb_value_.assign(num_total_, 0.0);
    art_begin_ = num_struct_ + num_rows_;
    num_art_ = 0;

    // Nonbasic placement: zero when the box admits it (interior state when
    // zero is strictly inside), otherwise the finite bound nearest zero.
    for (int v = 0; v < num_struct_; ++v) {
      double val;
      if (lower_[v] <= 0.0 && upper_[v] >= 0.0) {
        val = 0.0;
        if (lower_[v] == 0.0) {
          state_[v] = VarState::AtLower;
        } else if (upper_[v] == 0.0) {
          state_[v] = VarState::AtUpper;
        } else {
          state_[v] = VarState::Interior;
        }
      } else if (std::isfinite(lower_[v]) &&
                 (!std::isfinite(upper_[v]) || std::abs(lower_[v]) <= std::abs(upper_[v]))) {
        val = lower_[v];
        state_[v] = VarState::AtLower;
      } else {
        val = upper_[v];
        state_[v] = VarState::AtUpper;
      }
      nb_value_[v] = val;
    }

    // Rows in order eq, ge, le with slack bounds [0,0], (-inf,0], [0,inf).
    int r = 0;
    auto add_rows = [&](const SparseRows& rows, double slo, double shi) {
      for (int i = 0; i < rows.count(); ++i, ++r) {
        const int slack = num_struct_ + r;
        lower_[slack] = slo;
        upper_[slack] = shi;
        double residual = rows.rhs[i] * row_scale_[r];
        for (const auto& [col, val] : rows.entries[i]) {
          const double scaled = val * row_scale_[r] * col_scale_[col];
          ws_->tableau(r, col) = scaled;
          residual -= scaled * nb_value_[col];
        }
        ws_->tableau(r, slack) = 1.0;
        if (residual >= slo - 1e-12 && residual <= shi + 1e-12) {
          ws_->basis[r] = slack;
          ws_->xb[r] = residual;
          state_[slack] = VarState::Basic;
          row_of_[slack] = r;
        } else {
          // Slack rests at zero, which is its lower bound for <= rows and
          // its upper bound for >= rows.
          state_[slack] = shi == 0.0 && slo < 0.0 ? VarState::AtUpper : VarState::AtLower;
          nb_value_[slack] = 0.0;
          const int art = art_begin_ + num_art_;
          ++num_art_;
          if (residual < 0.0) {
            ws_->tableau.row(r) *= -1.0;
            flipped_rows_.insert(r);
          }
          ws_->tableau(r, art) = 1.0;
          lower_[art] = 0.0;
          upper_[art] = kInf;
          ws_->basis[r] = art;
          ws_->xb[r] = std::abs(residual);
          state_[art] = VarState::Basic;
          row_of_[art] = r;
        }
      }
    };
    add_rows(model_.eq, 0.0, 0.0);
    add_rows(model_.ge, -kInf, 0.0);
    add_rows(model_.le, 0.0, kInf);
    active_cols_ = art_begin_ + num_art_;
  }

  // Rebuilds the reduced-cost row for the given dense cost vector.
  void install_costs(const std::vector<double>& costs) {
    DenseMatrix& tab = ws_->tableau;
    for (int v = 0; v < num_total_; ++v) {
      tab(num_rows_, v) = v < active_cols_ ? costs[v] : 0.0;
    }
    for (int r = 0; r < num_rows_; ++r) {
      const double cb = costs[ws_->basis[r]];
      if (cb != 0.0) {
        tab.row(num_rows_).head(active_cols_) -= cb * tab.row(r).head(active_cols_);
      }
    }
    for (int r = 0; r < num_rows_; ++r) tab(num_rows_, ws_->basis[r]) = 0.0;
  }

  struct Entering {
    int var = -1;
    double direction = 0.0;
    double reduced = 0.0;
  };

  Entering price(bool bland, bool exclude_artificials) const {
    const DenseMatrix& tab = ws_->tableau;
    Entering best;
    const int limit = exclude_artificials ? art_begin_ : active_cols_;
    // Bland mode prices with a coarser tolerance: noise-level reduced costs
    // would otherwise keep re-entering the same degenerate cycle.
    const double tol = bland ? std::max(options_.pivot_tol, 1e-7) : options_.pivot_tol;
    for (int v = 0; v < limit; ++v) {
      const VarState st = state_[v];
      if (st == VarState::Basic) continue;
      if (lower_[v] == upper_[v]) continue;  // fixed
      const double dj = tab(num_rows_, v);
      double dir = 0.0;
      if (st == VarState::AtLower && dj < -tol) {
        dir = 1.0;
      } else if (st == VarState::AtUpper && dj > tol) {
        dir = -1.0;
      } else if (st == VarState::Interior && std::abs(dj) > tol) {
        dir = dj < 0.0 ? 1.0 : -1.0;
      } else {
        continue;
      }
      if (bland) return {v, dir, dj};
      if (std::abs(dj) > std::abs(best.reduced)) best = {v, dir, dj};
    }
    return best;
  }

  struct Leaving {
    double step = kInf;
    int row = -1;  // -1 means bound flip
    bool to_upper = false;
  };

  // Two-pass Harris-style ratio test. The first pass finds the tightest
  // step; the second picks, inside a small tolerance window, the blocking
  // row with the largest pivot magnitude. The step actually taken is the
  // chosen row's own ratio so its basic variable lands exactly on its
  // bound; negative rooms (basics marginally outside a bound from
  // roundoff) count as zero.
  Leaving ratio_test(int entering, double dir, bool bland) const {
    const DenseMatrix& tab = ws_->tableau;
    Leaving out;
    const double own_room = dir > 0.0 ? upper_[entering] - value_of(entering)
                                      : value_of(entering) - lower_[entering];
    out.step = own_room;

    auto row_ratio = [&](int r, double* t, bool* to_upper) -> bool {
      const double a = tab(r, entering);
      if (std::abs(a) <= options_.pivot_tol) return false;
      const double delta = -dir * a;  // basic movement per unit step
      const int bv = ws_->basis[r];
      double room;
      if (delta > 0.0) {
        room = upper_[bv] - ws_->xb[r];
        *to_upper = true;
        if (!std::isfinite(room)) return false;
        *t = std::max(room, 0.0) / delta;
      } else {
        room = ws_->xb[r] - lower_[bv];
        *to_upper = false;
        if (!std::isfinite(room)) return false;
        *t = std::max(room, 0.0) / (-delta);
      }
      return true;
    };

    double tmin = own_room;
    for (int r = 0; r < num_rows_; ++r) {
      double t;
      bool to_upper;
      if (row_ratio(r, &t, &to_upper) && t < tmin) tmin = t;
    }
    if (!std::isfinite(tmin)) return out;  // unbounded direction
    tmin = std::max(tmin, 0.0);

    // Exact blocking rule: only rows achieving the minimum ratio may leave,
    // so the step never pushes another basic past its bound. Among exact
    // ties prefer the largest pivot (or the lowest basis index under
    // Bland's rule).
    int best_row = -1;
    double best_metric = -1.0;
    double best_t = 0.0;
    bool best_to_upper = false;
    for (int r = 0; r < num_rows_; ++r) {
      double t;
      bool to_upper;
      if (!row_ratio(r, &t, &to_upper) || t > tmin) continue;
      if (bland) {
        if (best_row < 0 || ws_->basis[r] < ws_->basis[best_row]) {
          best_row = r;
          best_t = t;
          best_to_upper = to_upper;
        }
      } else if (std::abs(tab(r, entering)) > best_metric) {
        best_metric = std::abs(tab(r, entering));
        best_row = r;
        best_t = t;
        best_to_upper = to_upper;
      }
    }
    if (best_row < 0) {
      out.step = own_room;
      out.row = -1;
      return out;
    }
    out.step = std::min(best_t, own_room);
    out.row = best_row;
    out.to_upper = best_to_upper;
    return out;
  }

  void apply_pivot(int entering, double dir, const Leaving& leave) {
    DenseMatrix& tab = ws_->tableau;
    const double step = std::max(leave.step, 0.0);
    if (leave.row < 0) {
      // Bound flip: no basis change.
      if (step > 0.0) {
        for (int r = 0; r < num_rows_; ++r) {
          const double a = tab(r, entering);
          if (a != 0.0) ws_->xb[r] -= dir * step * a;
        }
      }
      nb_value_[entering] += dir * step;
      state_[entering] = dir > 0.0 ? VarState::AtUpper : VarState::AtLower;
      return;
    }

    const int r = leave.row;
    const int leaving = ws_->basis[r];
    const double new_entering_value = value_of(entering) + dir * step;
    for (int i = 0; i < num_rows_; ++i) {
      if (i == r) continue;
      const double a = tab(i, entering);
      if (a != 0.0) ws_->xb[i] -= dir * step * a;
    }
    // Leaving variable lands exactly on its bound.
    nb_value_[leaving] = leave.to_upper ? upper_[leaving] : lower_[leaving];
    state_[leaving] = leave.to_upper ? VarState::AtUpper : VarState::AtLower;
    row_of_[leaving] = -1;

    // Elimination, restricted to the columns actually in play.
    const double piv = tab(r, entering);
    Eigen::VectorXd col = tab.col(entering);
    tab.row(r).head(active_cols_) /= piv;
    col(r) = 0.0;
    tab.leftCols(active_cols_).noalias() -= col * tab.row(r).head(active_cols_);
    tab.col(entering).setZero();
    tab(r, entering) = 1.0;

    ws_->basis[r] = entering;
    ws_->xb[r] = new_entering_value;
    state_[entering] = VarState::Basic;
    row_of_[entering] = r;
  }

  bool optimize(bool exclude_artificials, bool* unbounded_out) {
    const long limit =
        options_.iteration_limit_factor * static_cast<long>(num_rows_ + num_total_) + 1000;
    int degenerate_streak = 0;
    bool bland = options_.bland_from_start;
    while (true) {
      if (pivots_ > limit) {
        throw IterationLimit("simplex exceeded " + std::to_string(limit) + " pivots");
      }
      Entering ent = price(bland, exclude_artificials);
      if (ent.var < 0) return true;
      Leaving leave = ratio_test(ent.var, ent.direction, bland);
      if (!std::isfinite(leave.step)) {
        if (unbounded_out != nullptr) *unbounded_out = true;
        return true;
      }
      ++pivots_;
      if (leave.step <= 1e-10) {
        if (++degenerate_streak >= options_.bland_after_degenerate) bland = true;
      } else {
        degenerate_streak = 0;
        // Once Bland engages it stays on: alternating rules can re-enter
        // the same degenerate cycle.
      }
      apply_pivot(ent.var, ent.direction, leave);
    }
  }

  // Residual of the scaled row system at the tracked point; used to tell
  // numerical breakdown apart from genuine infeasibility.
  double tracked_row_error() const {
    std::vector<double> x(num_total_, 0.0);
    for (int v = 0; v < num_total_; ++v) x[v] = value_of(v);
    double worst = 0.0;
    int r = 0;
    for (const SparseRows* rows : {&model_.eq, &model_.ge, &model_.le}) {
      for (int i = 0; i < rows->count(); ++i, ++r) {
        double acc = x[num_struct_ + r] - rows->rhs[i] * row_scale_[r];
        for (const auto& [col, val] : rows->entries[i]) {
          acc += val * row_scale_[r] * col_scale_[col] * x[col];
        }
        if (art_row_sign_[r] != 0.0) acc += art_row_sign_[r] * x[art_var_of_row_[r]];
        worst = std::max(worst, std::abs(acc));
      }
    }
    return worst;
  }

  bool phase1() {
    art_var_of_row_.assign(num_rows_, -1);
    art_row_sign_.assign(num_rows_, 0.0);
    {
      int art_seen = 0;
      for (int r = 0; r < num_rows_ && art_seen < num_art_; ++r) {
        const int bv = ws_->basis[r];
        if (bv >= art_begin_) {
          art_var_of_row_[r] = bv;
          // The artificial's original column is +-e_r; the sign got folded
          // into the row flip at build time.
          art_row_sign_[r] = row_was_flipped(r) ? -1.0 : 1.0;
          ++art_seen;
        }
      }
    }
    if (num_art_ == 0) return true;
    std::vector<double> costs(num_total_, 0.0);
    for (int a = 0; a < num_art_; ++a) costs[art_begin_ + a] = 1.0;
    install_costs(costs);
    optimize(false, nullptr);
    double infeasibility = 0.0;
    for (int a = 0; a < num_art_; ++a) infeasibility += value_of(art_begin_ + a);
    if (infeasibility > options_.feas_tol) {
      if (tracked_row_error() > 1e-5) {
        throw IterationLimit("phase-1 state no longer matches the row system");
      }
      return false;
    }
    // Freeze artificials at zero for phase 2.
    for (int a = 0; a < num_art_; ++a) {
      const int v = art_begin_ + a;
      upper_[v] = 0.0;
      if (state_[v] != VarState::Basic) {
        nb_value_[v] = 0.0;
        state_[v] = VarState::AtLower;
      }
    }
    return true;
  }

  bool row_was_flipped(int r) const { return flipped_rows_.count(r) > 0; }

  bool phase2() {
    std::vector<double> costs(num_total_, 0.0);
    for (const auto& [var, val] : model_.objective) {
      costs[var] += val * col_scale_[var];
    }
    install_costs(costs);
    bool unbounded = false;
    optimize(true, &unbounded);
    if (!unbounded && tracked_row_error() > 1e-6) {
      throw IterationLimit("phase-2 state no longer matches the row system");
    }
    return !unbounded;
  }

  const MilpModel& model_;
  LpOptions options_;
  std::unique_ptr<LpWorkspace> owned_;
  LpWorkspace* ws_;

  int num_rows_ = 0;
  int num_struct_ = 0;
  int num_total_ = 0;
  int art_begin_ = 0;
  int num_art_ = 0;
  int active_cols_ = 0;
  bool contradictory_ = false;
  long pivots_ = 0;

  std::vector<double> lower_, upper_;
  std::vector<double> row_scale_, col_scale_;
  std::vector<VarState> state_;
  std::vector<int> row_of_;
  std::vector<double> nb_value_;
  std::vector<int> art_var_of_row_;
  std::vector<double> art_row_sign_;
  std::set<int> flipped_rows_;
};

}  // namespace

LpSolution solve_lp(const MilpModel& model, const std::vector<std::pair<int, double>>& var_fixings,
                    const LpOptions& options, LpWorkspace* workspace) {
  Simplex solver(model, var_fixings, options, workspace);
  return solver.run();
}

}  // namespace optex
