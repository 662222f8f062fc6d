#pragma once

// Primal simplex on a dense tableau with general variable bounds.
//
// The model is brought to the standard form
//     A t = b,   0 <= t_j <= U_j  (U_j possibly +inf)
// by shifting variables with a finite lower bound (x = lb + t), mirroring
// variables with only an upper bound (x = ub - t), and splitting free
// variables (x = t+ - t-).  Inequalities get slack/surplus columns; rows are
// then negated as needed so b >= 0, and any row without a usable slack gets
// an artificial column.  Phase 1 minimizes the sum of artificials; phase 2
// minimizes the translated objective.
//
// Bounded-variable pivoting: a nonbasic column sits at its lower or upper
// bound; the ratio test allows a pure bound flip (no basis change).  Basic
// values are kept in an explicit vector (x_B), updated directly from the
// entering step length, which keeps sign conventions simple.
//
// Pricing is Dantzig's rule; after a long streak of degenerate steps the
// solver switches permanently to Bland's rule, which guarantees termination.
// Elimination roundoff is kept in check by refactorization: every
// kRefactorInterval pivots the tableau and basic values are rebuilt from the
// pristine standard-form data via a dense LU of the basis matrix, and the
// phase-1 feasibility decision is always taken on refreshed values.  Every
// result is re-verified against the original constraints before being
// reported; a failed check triggers a refactor-and-resume round.  If a run
// still breaks down, the whole solve restarts once from the initial basis
// with Bland pricing and a short refactorization leash; only a failure of
// that conservative pass surfaces as NumericalFailure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "comicl/mip.hpp"

namespace comicl {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit, NumericalFailure };

inline const char* lp_status_text(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterLimit: return "iteration-limit";
    case LpStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct LpResult {
  LpStatus status = LpStatus::NumericalFailure;
  std::vector<double> x;       // original variable space (empty unless Optimal)
  double objective = 0.0;
  std::int64_t pivots = 0;
  std::string message;
};

namespace detail {

class SimplexSolver {
 public:
  SimplexSolver(const MipModel& model, std::span<const Interval> bounds)
      : model_(model) {
    const std::size_t n = model.num_vars();
    lb_.resize(n);
    ub_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (!bounds.empty()) {
        lb_[j] = bounds[j].lo;
        ub_[j] = bounds[j].hi;
      } else {
        lb_[j] = model.vars()[j].lb;
        ub_[j] = model.vars()[j].ub;
      }
    }
  }

  LpResult solve() {
    LpResult res;
    for (std::size_t j = 0; j < lb_.size(); ++j) {
      if (lb_[j] > ub_[j]) {
        res.status = LpStatus::Infeasible;
        res.message = "conflicting bounds on " + model_.vars()[j].name;
        return res;
      }
    }
    if (!build_standard_form(&res)) return res;  // trivially infeasible row
    res = run_phases();
    if (res.status == LpStatus::NumericalFailure) {
      // Conservative rerun from the initial basis: Bland pricing ends any
      // wandering, and a short refactorization leash keeps every ratio-test
      // decision on near-exact data.
      use_bland_ = true;
      refactor_interval_ = 8;
      res = run_phases();
    }
    return res;
  }

 private:
  LpResult run_phases() {
    LpResult res;
    init_tableau();

    // Phase 1: minimize the sum of artificial columns.
    if (num_artificial_ > 0) {
      std::vector<double> c1(num_cols_, 0.0);
      for (std::size_t j = first_artificial_; j < num_cols_; ++j) c1[j] = 1.0;
      const LpStatus st = iterate(c1, /*phase1=*/true);
      if (st != LpStatus::Optimal) {
        res.status = st;
        res.pivots = pivots_;
        res.message = "phase 1 stopped: " + std::string(lp_status_text(st)) +
                      " after " + std::to_string(pivots_) + " pivots";
        return res;
      }
      // Decide feasibility on freshly computed basic values: drift in the
      // artificial sum would misclassify borderline rows.
      if (pivots_since_refactor_ > 0 && !refactorize()) {
        res.status = LpStatus::NumericalFailure;
        res.pivots = pivots_;
        res.message = "basis refactorization failed after phase 1";
        return res;
      }
      double infeas = 0.0;
      for (std::size_t i = 0; i < num_rows_; ++i) {
        if (basic_[i] >= first_artificial_) infeas += xb_[i];
      }
      if (infeas > feas_tol_) {
        res.status = LpStatus::Infeasible;
        res.pivots = pivots_;
        return res;
      }
      drive_out_artificials();
      for (std::size_t j = first_artificial_; j < num_cols_; ++j) upper_[j] = 0.0;
    }

    // Phase 2: minimize the translated objective.  When the final point
    // fails re-verification (accumulated roundoff), rebuild the tableau from
    // the original data for the current basis and resume pivoting.
    std::vector<double> c2(num_cols_, 0.0);
    for (const auto& [coef, var] : model_.objective().terms()) {
      add_objective_coef(var.index, coef, &c2);
    }
    for (int attempt = 0;; ++attempt) {
      const LpStatus st = iterate(c2, /*phase1=*/false);
      res.pivots = pivots_;
      if (st != LpStatus::Optimal) {
        res.status = st;
        if (st != LpStatus::Unbounded) {
          res.message = std::string(lp_status_text(st)) + " after " +
                        std::to_string(pivots_) + " pivots";
        }
        return res;
      }
      res.x = extract_solution();
      res.objective = MipModel::evaluate(model_.objective(), res.x);
      std::string violation;
      if (verify(res.x, &violation)) break;
      if (attempt >= 2 || !refactorize()) {
        res.status = LpStatus::NumericalFailure;
        res.x.clear();
        res.message = "result failed re-verification after " +
                      std::to_string(pivots_) + " pivots (" + violation + ")";
        return res;
      }
    }
    res.status = LpStatus::Optimal;
    return res;
  }

  enum class Map { Shift, Mirror, Split };
  struct VarMap {
    Map kind = Map::Shift;
    std::size_t col = 0;       // primary column
    std::size_t col2 = 0;      // negative part for Split
    double offset = 0.0;       // lb for Shift, ub for Mirror
  };

  // Builds rows/columns.  Returns false (with res filled) only when a
  // degenerate empty row is violated outright.
  bool build_standard_form(LpResult* res) {
    const std::size_t n = model_.num_vars();
    maps_.resize(n);
    num_structural_ = 0;
    for (std::size_t j = 0; j < n; ++j) {
      VarMap& m = maps_[j];
      if (std::isfinite(lb_[j])) {
        m.kind = Map::Shift;
        m.offset = lb_[j];
        m.col = num_structural_++;
        col_upper_seed_.push_back(std::isfinite(ub_[j]) ? ub_[j] - lb_[j] : kInf);
      } else if (std::isfinite(ub_[j])) {
        m.kind = Map::Mirror;
        m.offset = ub_[j];
        m.col = num_structural_++;
        col_upper_seed_.push_back(kInf);
      } else {
        m.kind = Map::Split;
        m.col = num_structural_++;
        m.col2 = num_structural_++;
        col_upper_seed_.push_back(kInf);
        col_upper_seed_.push_back(kInf);
      }
    }

    for (const Constraint& c : model_.constraints()) {
      Row row;
      row.coef.assign(num_structural_, 0.0);
      double rhs = c.rhs;
      for (const auto& [coef, var] : c.expr.terms()) {
        const VarMap& m = maps_[var.index];
        switch (m.kind) {
          case Map::Shift:
            row.coef[m.col] += coef;
            rhs -= coef * m.offset;
            break;
          case Map::Mirror:
            row.coef[m.col] -= coef;
            rhs -= coef * m.offset;
            break;
          case Map::Split:
            row.coef[m.col] += coef;
            row.coef[m.col2] -= coef;
            break;
        }
      }
      bool all_zero = true;
      for (double v : row.coef) {
        if (v != 0.0) { all_zero = false; break; }
      }
      if (all_zero) {
        // 0 (sense) rhs: either vacuous or plainly infeasible.
        const bool ok = (c.sense == Sense::Le && rhs >= -kLpFeasTol) ||
                        (c.sense == Sense::Ge && rhs <= kLpFeasTol) ||
                        (c.sense == Sense::Eq && std::fabs(rhs) <= kLpFeasTol);
        if (!ok) {
          res->status = LpStatus::Infeasible;
          res->message = "constraint " + c.label + " is unsatisfiable";
          return false;
        }
        continue;
      }
      row.sense = c.sense;
      row.rhs = rhs;
      rows_.push_back(std::move(row));
    }
    return true;
  }

  void init_tableau() {
    num_rows_ = rows_.size();
    const std::size_t num_slack = [&] {
      std::size_t k = 0;
      for (const Row& r : rows_) k += (r.sense != Sense::Eq) ? 1 : 0;
      return k;
    }();

    // Column layout: structural | slack | artificial.
    const std::size_t slack_base = num_structural_;
    std::vector<int> slack_col(num_rows_, -1);
    {
      std::size_t s = 0;
      for (std::size_t i = 0; i < num_rows_; ++i) {
        if (rows_[i].sense != Sense::Eq) slack_col[i] = static_cast<int>(slack_base + s++);
      }
    }
    first_artificial_ = slack_base + num_slack;

    // Determine which rows need an artificial: after sign normalization the
    // slack column must have coefficient +1 to seed the basis.
    std::vector<bool> negate(num_rows_, false);
    std::vector<bool> needs_artificial(num_rows_, false);
    for (std::size_t i = 0; i < num_rows_; ++i) {
      negate[i] = rows_[i].rhs < 0.0;
      double slack_sign = 0.0;
      if (rows_[i].sense == Sense::Le) slack_sign = 1.0;
      if (rows_[i].sense == Sense::Ge) slack_sign = -1.0;
      if (negate[i]) slack_sign = -slack_sign;
      needs_artificial[i] = (slack_sign != 1.0);
    }
    num_artificial_ = 0;
    std::vector<int> art_col(num_rows_, -1);
    for (std::size_t i = 0; i < num_rows_; ++i) {
      if (needs_artificial[i]) {
        art_col[i] = static_cast<int>(first_artificial_ + num_artificial_++);
      }
    }
    num_cols_ = first_artificial_ + num_artificial_;

    tab_.assign(num_rows_ * num_cols_, 0.0);
    xb_.assign(num_rows_, 0.0);
    basic_.assign(num_rows_, 0);
    upper_ = col_upper_seed_;
    upper_.resize(num_cols_, kInf);
    at_upper_.assign(num_cols_, false);
    in_basis_.assign(num_cols_, false);

    double bmax = 0.0;
    for (std::size_t i = 0; i < num_rows_; ++i) {
      const double sgn = negate[i] ? -1.0 : 1.0;
      double* row = &tab_[i * num_cols_];
      for (std::size_t j = 0; j < num_structural_; ++j) {
        row[j] = sgn * rows_[i].coef[j];
      }
      if (slack_col[i] >= 0) {
        row[slack_col[i]] = sgn * (rows_[i].sense == Sense::Le ? 1.0 : -1.0);
      }
      const double b = sgn * rows_[i].rhs;
      bmax = std::max(bmax, std::fabs(b));
      xb_[i] = b;
      if (art_col[i] >= 0) {
        row[art_col[i]] = 1.0;
        basic_[i] = static_cast<std::size_t>(art_col[i]);
      } else {
        basic_[i] = static_cast<std::size_t>(slack_col[i]);
      }
      in_basis_[basic_[i]] = true;
    }
    feas_tol_ = kLpFeasTol * (1.0 + bmax);
    max_pivots_ = 20000 + 200 * static_cast<std::int64_t>(num_rows_ + num_cols_);
    pivots_since_refactor_ = 0;
    a0_ = tab_;  // pristine standard-form matrix and rhs for refactorization
    b0_ = xb_;
  }

  void add_objective_coef(std::size_t var, double coef, std::vector<double>* c) {
    const VarMap& m = maps_[var];
    switch (m.kind) {
      case Map::Shift: (*c)[m.col] += coef; break;
      case Map::Mirror: (*c)[m.col] -= coef; break;
      case Map::Split:
        (*c)[m.col] += coef;
        (*c)[m.col2] -= coef;
        break;
    }
  }

  // Subtract multiples of the (current) rows so reduced costs vanish on the
  // basic columns.  Rows are unit vectors on basic columns, so the per-row
  // factors can be captured up front.
  void reduce_costs(std::vector<double>* c) {
    std::vector<double> factor(num_rows_);
    for (std::size_t i = 0; i < num_rows_; ++i) factor[i] = (*c)[basic_[i]];
    for (std::size_t i = 0; i < num_rows_; ++i) {
      if (factor[i] == 0.0) continue;
      const double* row = &tab_[i * num_cols_];
      for (std::size_t j = 0; j < num_cols_; ++j) (*c)[j] -= factor[i] * row[j];
    }
  }

  // One simplex phase.  `cost0` is the unreduced cost row; the working copy
  // is re-reduced from scratch after every refactorization.  Returns Optimal
  // when priced out.
  LpStatus iterate(const std::vector<double>& cost0, bool phase1) {
    std::vector<double> cost = cost0;
    reduce_costs(&cost);
    double dual_tol = dual_tolerance(cost);
    std::int64_t degenerate_streak = 0;

    while (true) {
      if (pivots_ >= max_pivots_) return LpStatus::IterLimit;
      if (pivots_since_refactor_ >= refactor_interval_) {
        if (!refactorize()) return LpStatus::NumericalFailure;
        cost = cost0;
        reduce_costs(&cost);
        dual_tol = dual_tolerance(cost);
      }
      const std::size_t enter = price(cost, dual_tol);
      if (enter == kNone) return LpStatus::Optimal;
      const int sigma = at_upper_[enter] ? -1 : +1;

      // Ratio test over the entering column.
      const double flip_t = upper_[enter];
      double best_t = flip_t;
      std::size_t leave_row = kNone;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < num_rows_; ++i) {
        const double d = sigma * tab_[i * num_cols_ + enter];
        const std::size_t b = basic_[i];
        if (d > kPivTol) {  // basic value decreases toward 0
          const double t = std::max(0.0, xb_[i]) / d;
          if (t < best_t - kRatioTieTol ||
              (t < best_t + kRatioTieTol && better_leaver(i, leave_row))) {
            if (t < best_t) best_t = t;
            leave_row = i;
            leave_to_upper = false;
          }
        } else if (d < -kPivTol && std::isfinite(upper_[b])) {
          const double t = std::max(0.0, upper_[b] - xb_[i]) / (-d);
          if (t < best_t - kRatioTieTol ||
              (t < best_t + kRatioTieTol && better_leaver(i, leave_row))) {
            if (t < best_t) best_t = t;
            leave_row = i;
            leave_to_upper = true;
          }
        }
      }

      if (leave_row == kNone && !std::isfinite(flip_t)) {
        return phase1 ? LpStatus::NumericalFailure : LpStatus::Unbounded;
      }

      if (best_t <= kDegenTol) {
        if (++degenerate_streak > kBlandThreshold) use_bland_ = true;
      } else {
        degenerate_streak = 0;
      }

      if (leave_row == kNone) {
        // Pure bound flip: move the column to its opposite bound.
        const double step = sigma * flip_t;
        for (std::size_t i = 0; i < num_rows_; ++i) {
          xb_[i] -= step * tab_[i * num_cols_ + enter];
        }
        at_upper_[enter] = !at_upper_[enter];
        ++pivots_;
        ++pivots_since_refactor_;
        continue;
      }

      pivot(enter, leave_row, sigma, best_t, leave_to_upper, &cost);
      ++pivots_;
      ++pivots_since_refactor_;
    }
  }

  static double dual_tolerance(const std::vector<double>& cost) {
    double cmax = 0.0;
    for (double v : cost) cmax = std::max(cmax, std::fabs(v));
    return 1e-9 * (1.0 + cmax);
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr double kPivTol = 1e-10;
  static constexpr double kDegenTol = 1e-10;
  static constexpr double kRatioTieTol = 1e-9;
  static constexpr std::int64_t kBlandThreshold = 1000;
  static constexpr std::int64_t kRefactorInterval = 64;

  // Prefer the leaving row whose basic variable has the smaller column index
  // (Bland) so degenerate ties cannot cycle once Bland mode is active; in
  // Dantzig mode prefer the smaller row index for determinism.
  bool better_leaver(std::size_t candidate_row, std::size_t incumbent_row) const {
    if (incumbent_row == kNone) return true;
    if (use_bland_) return basic_[candidate_row] < basic_[incumbent_row];
    return candidate_row < incumbent_row;
  }

  // Entering column: Dantzig (largest reduced-cost violation) or Bland
  // (smallest index).  Columns fixed at zero width and artificials pinned
  // after phase 1 are skipped via upper_ == 0.
  std::size_t price(const std::vector<double>& cost, double dual_tol) const {
    std::size_t best = kNone;
    double best_score = dual_tol;
    for (std::size_t j = 0; j < num_cols_; ++j) {
      if (in_basis_[j]) continue;
      if (upper_[j] <= 0.0 && !at_upper_[j]) continue;  // fixed at 0
      double score = 0.0;
      if (at_upper_[j]) {
        score = cost[j];  // decreasing from upper improves if cost > 0
      } else {
        score = -cost[j];  // increasing from lower improves if cost < 0
      }
      if (score > best_score) {
        best = j;
        best_score = score;
        if (use_bland_) break;  // first eligible index wins
      }
    }
    return best;
  }

  void pivot(std::size_t enter, std::size_t row, int sigma, double t,
             bool leave_to_upper, std::vector<double>* cost) {
    // Update basic values along the step, then swap basis labels.
    for (std::size_t i = 0; i < num_rows_; ++i) {
      xb_[i] -= sigma * t * tab_[i * num_cols_ + enter];
    }
    const double enter_value = (sigma > 0 ? t : upper_[enter] - t);
    const std::size_t leave = basic_[row];
    at_upper_[leave] = leave_to_upper;
    in_basis_[leave] = false;
    at_upper_[enter] = false;
    in_basis_[enter] = true;
    basic_[row] = enter;
    xb_[row] = enter_value;

    // Row elimination on the matrix and the active cost row.
    double* prow = &tab_[row * num_cols_];
    const double piv = prow[enter];
    const double inv = 1.0 / piv;
    for (std::size_t j = 0; j < num_cols_; ++j) prow[j] *= inv;
    prow[enter] = 1.0;  // kill roundoff on the pivot itself
    for (std::size_t i = 0; i < num_rows_; ++i) {
      if (i == row) continue;
      double* irow = &tab_[i * num_cols_];
      const double f = irow[enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < num_cols_; ++j) irow[j] -= f * prow[j];
      irow[enter] = 0.0;
    }
    const double cf = (*cost)[enter];
    if (cf != 0.0) {
      for (std::size_t j = 0; j < num_cols_; ++j) (*cost)[j] -= cf * prow[j];
      (*cost)[enter] = 0.0;
    }
  }

  // Pivot basic artificials (value ~0) out of the basis where a real column
  // is available; rows with no real column are redundant and keep their
  // artificial pinned at zero.
  void drive_out_artificials() {
    for (std::size_t i = 0; i < num_rows_; ++i) {
      if (basic_[i] < first_artificial_) continue;
      const double* row = &tab_[i * num_cols_];
      std::size_t enter = kNone;
      for (std::size_t j = 0; j < first_artificial_; ++j) {
        if (!in_basis_[j] && std::fabs(row[j]) > 1e-8) {
          enter = j;
          break;
        }
      }
      if (enter == kNone) continue;
      std::vector<double> dummy_cost(num_cols_, 0.0);
      const int sigma = at_upper_[enter] ? -1 : +1;
      pivot(enter, i, sigma, 0.0, /*leave_to_upper=*/false, &dummy_cost);
      ++pivots_;
      ++pivots_since_refactor_;
    }
  }

  // Rebuilds the tableau and basic values from the pristine standard-form
  // data for the current basis, discarding accumulated elimination roundoff.
  // Dense LU of the basis matrix with partial pivoting.  Returns false when
  // the basis is numerically singular or its exact solution lies outside the
  // column bounds by more than the feasibility tolerance.
  bool refactorize() {
    const std::size_t m = num_rows_;
    std::vector<double> lu(m * m);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t i = 0; i < m; ++i) {
        lu[i * m + k] = a0_[i * num_cols_ + basic_[k]];
      }
    }
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    for (std::size_t k = 0; k < m; ++k) {
      std::size_t p = k;
      double best = std::fabs(lu[perm[k] * m + k]);
      for (std::size_t i = k + 1; i < m; ++i) {
        const double v = std::fabs(lu[perm[i] * m + k]);
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best < 1e-12) return false;
      std::swap(perm[k], perm[p]);
      const double piv = lu[perm[k] * m + k];
      for (std::size_t i = k + 1; i < m; ++i) {
        double& l = lu[perm[i] * m + k];
        l /= piv;
        if (l == 0.0) continue;
        for (std::size_t j = k + 1; j < m; ++j) {
          lu[perm[i] * m + j] -= l * lu[perm[k] * m + j];
        }
      }
    }
    const auto lu_solve = [&](const double* rhs, double* out) {
      // out = B^{-1} rhs via L z = P rhs, then U out = z.
      std::vector<double> z(m);
      for (std::size_t k = 0; k < m; ++k) {
        double acc = rhs[perm[k]];
        for (std::size_t j = 0; j < k; ++j) acc -= lu[perm[k] * m + j] * z[j];
        z[k] = acc;
      }
      for (std::size_t k = m; k-- > 0;) {
        double acc = z[k];
        for (std::size_t j = k + 1; j < m; ++j) acc -= lu[perm[k] * m + j] * out[j];
        out[k] = acc / lu[perm[k] * m + k];
      }
    };

    // Basic values first so an out-of-bounds basis leaves the state intact:
    // x_B = B^{-1} (b - sum over nonbasic columns at upper of u_j a_j).
    std::vector<double> rhs = b0_;
    for (std::size_t j = 0; j < num_cols_; ++j) {
      if (in_basis_[j] || !at_upper_[j]) continue;
      const double u = upper_[j];
      if (u == 0.0) continue;
      for (std::size_t i = 0; i < m; ++i) rhs[i] -= u * a0_[i * num_cols_ + j];
    }
    std::vector<double> xb(m);
    lu_solve(rhs.data(), xb.data());
    for (std::size_t i = 0; i < m; ++i) {
      const double cap = upper_[basic_[i]];
      if (xb[i] < -feas_tol_ || xb[i] > cap + feas_tol_) return false;
      xb[i] = std::max(xb[i], 0.0);
      if (std::isfinite(cap)) xb[i] = std::min(xb[i], cap);
    }

    std::vector<double> fresh(m * num_cols_);
    std::vector<double> col(m), sol(m);
    for (std::size_t c = 0; c < num_cols_; ++c) {
      for (std::size_t i = 0; i < m; ++i) col[i] = a0_[i * num_cols_ + c];
      lu_solve(col.data(), sol.data());
      for (std::size_t i = 0; i < m; ++i) fresh[i * num_cols_ + c] = sol[i];
    }
    // Basic columns are unit vectors by construction; snap off the residue.
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t c = basic_[k];
      for (std::size_t i = 0; i < m; ++i) {
        fresh[i * num_cols_ + c] = (i == k) ? 1.0 : 0.0;
      }
    }
    tab_ = std::move(fresh);
    xb_ = std::move(xb);
    pivots_since_refactor_ = 0;
    return true;
  }

  std::vector<double> extract_solution() const {
    std::vector<double> t(num_cols_, 0.0);
    for (std::size_t j = 0; j < num_cols_; ++j) {
      if (at_upper_[j]) t[j] = upper_[j];
    }
    for (std::size_t i = 0; i < num_rows_; ++i) t[basic_[i]] = xb_[i];

    std::vector<double> x(model_.num_vars(), 0.0);
    for (std::size_t v = 0; v < maps_.size(); ++v) {
      const VarMap& m = maps_[v];
      switch (m.kind) {
        case Map::Shift: x[v] = m.offset + t[m.col]; break;
        case Map::Mirror: x[v] = m.offset - t[m.col]; break;
        case Map::Split: x[v] = t[m.col] - t[m.col2]; break;
      }
    }
    return x;
  }

  bool verify(std::span<const double> x, std::string* worst = nullptr) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double slack = feas_tol_;
      if (x[j] < lb_[j] - slack || x[j] > ub_[j] + slack) {
        if (worst) {
          *worst = detail_violation(model_.var(VarRef{
                                        static_cast<std::uint32_t>(j),
                                        model_.id()}).name,
                                    std::max(lb_[j] - x[j], x[j] - ub_[j]));
        }
        return false;
      }
    }
    for (const Constraint& c : model_.constraints()) {
      const double lhs = MipModel::evaluate(c.expr, x);
      const double tol = feas_tol_ * (1.0 + std::fabs(c.rhs));
      double excess = 0.0;
      switch (c.sense) {
        case Sense::Le: excess = lhs - c.rhs; break;
        case Sense::Ge: excess = c.rhs - lhs; break;
        case Sense::Eq: excess = std::fabs(lhs - c.rhs); break;
      }
      if (excess > tol) {
        if (worst) *worst = detail_violation(c.label, excess);
        return false;
      }
    }
    return true;
  }

  static std::string detail_violation(const std::string& name, double amount) {
    return name + " violated by " + detail::format("%g", amount);
  }

  struct Row {
    std::vector<double> coef;
    Sense sense = Sense::Eq;
    double rhs = 0.0;
  };

  const MipModel& model_;
  std::vector<double> lb_, ub_;
  std::vector<VarMap> maps_;
  std::vector<Row> rows_;
  std::vector<double> col_upper_seed_;

  std::size_t num_structural_ = 0;
  std::size_t num_rows_ = 0;
  std::size_t num_cols_ = 0;
  std::size_t first_artificial_ = 0;
  std::size_t num_artificial_ = 0;

  std::vector<double> tab_;   // row-major num_rows_ x num_cols_
  std::vector<double> xb_;    // current basic values
  std::vector<double> a0_;    // pristine copy of the initial tableau
  std::vector<double> b0_;    // pristine normalized rhs
  std::vector<std::size_t> basic_;
  std::vector<double> upper_;
  std::vector<bool> at_upper_;
  std::vector<bool> in_basis_;

  double feas_tol_ = kLpFeasTol;
  std::int64_t pivots_ = 0;
  std::int64_t max_pivots_ = 0;
  std::int64_t pivots_since_refactor_ = 0;
  std::int64_t refactor_interval_ = kRefactorInterval;
  bool use_bland_ = false;
};

}  // namespace detail

// Solves the LP relaxation of `model` (integrality ignored).  When
// `bounds_override` is non-empty it must have one interval per variable and
// replaces the model bounds; branch and bound uses this to tighten bounds
// per node without mutating the model.
inline LpResult solve_lp(const MipModel& model,
                         std::span<const Interval> bounds_override = {}) {
  if (!bounds_override.empty()) {
    require(bounds_override.size() == model.num_vars(),
            "solve_lp: bounds_override size mismatch");
  }
  detail::SimplexSolver solver(model, bounds_override);
  return solver.solve();
}

}  // namespace comicl
