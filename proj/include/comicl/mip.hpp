#pragma once

// Mixed-integer linear model container.
//
// MipModel stores variables, linear constraints, and a minimization
// objective.  Constraints are normalized on entry (duplicate variables
// merged, constant folded into the right-hand side, terms sorted by
// variable index) so every downstream consumer — the simplex solver, the
// feasibility checker, and the LP text emitter — sees one canonical form.

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "comicl/common.hpp"

namespace comicl {

enum class VarKind { Continuous, Integer, Binary };
enum class Sense { Le, Eq, Ge };

inline const char* sense_text(Sense s) {
  switch (s) {
    case Sense::Le: return "<=";
    case Sense::Eq: return "=";
    case Sense::Ge: return ">=";
  }
  return "?";
}

// Handle to a variable.  Valid only for the model that issued it; the model
// id lets the container reject handles from foreign models.
struct VarRef {
  std::uint32_t index = 0;
  std::uint32_t model = 0;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lb = -kInf;
  double ub = kInf;
};

// Linear expression: sum of (coefficient, variable) terms plus a constant.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double c) : constant_(c) {}          // NOLINT: implicit by design
  LinExpr(VarRef v) { terms_.push_back({1.0, v}); }  // NOLINT

  LinExpr& operator+=(const LinExpr& o) {
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    constant_ += o.constant_;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& o) {
    for (const auto& t : o.terms_) terms_.push_back({-t.first, t.second});
    constant_ -= o.constant_;
    return *this;
  }
  LinExpr& operator*=(double s) {
    for (auto& t : terms_) t.first *= s;
    constant_ *= s;
    return *this;
  }
  LinExpr& add_term(double coef, VarRef v) {
    terms_.push_back({coef, v});
    return *this;
  }

  const std::vector<std::pair<double, VarRef>>& terms() const { return terms_; }
  double constant() const { return constant_; }
  void set_constant(double c) { constant_ = c; }

  // Merge duplicates, drop zero coefficients, sort by variable index.
  void normalize() {
    std::map<std::uint32_t, double> acc;
    for (const auto& [coef, var] : terms_) acc[var.index] += coef;
    const std::uint32_t model = terms_.empty() ? 0 : terms_.front().second.model;
    terms_.clear();
    for (const auto& [idx, coef] : acc) {
      if (coef != 0.0) terms_.push_back({coef, VarRef{idx, model}});
    }
  }

 private:
  std::vector<std::pair<double, VarRef>> terms_;
  double constant_ = 0.0;
};

inline LinExpr operator*(double s, VarRef v) { return LinExpr().add_term(s, v); }
inline LinExpr operator*(VarRef v, double s) { return s * v; }
inline LinExpr operator*(LinExpr e, double s) { return e *= s; }
inline LinExpr operator*(double s, LinExpr e) { return e *= s; }
inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator-(LinExpr a) { return a *= -1.0; }

struct Constraint {
  LinExpr expr;  // normalized, constant == 0
  Sense sense = Sense::Le;
  double rhs = 0.0;
  std::string label;
};

class MipModel {
 public:
  MipModel() : id_(next_id()++) {}

  std::uint32_t id() const { return id_; }

  VarRef add_var(std::string_view name, VarKind kind, double lb, double ub) {
    if (kind == VarKind::Binary) {
      require(lb >= 0.0 && ub <= 1.0,
              "add_var: binary variable bounds must lie within [0,1]");
    }
    if (lb > ub) {
      fail("add_var: lower bound %g exceeds upper bound %g for '%s'", lb, ub,
           std::string(name).c_str());
    }
    std::string n = name.empty()
                        ? "v" + std::to_string(vars_.size())
                        : std::string(name);
    validate_name(n);
    require(used_names_.insert(n).second,
            "add_var: duplicate variable name '" + n + "'");
    vars_.push_back(Variable{std::move(n), kind, lb, ub});
    return VarRef{static_cast<std::uint32_t>(vars_.size() - 1), id_};
  }

  // "prefix0", "prefix1", ... with an independent counter per prefix, so
  // generated names are stable regardless of interleaving across prefixes.
  std::string fresh_name(std::string_view prefix) {
    auto& n = prefix_counters_[std::string(prefix)];
    return std::string(prefix) + std::to_string(n++);
  }

  int add_constraint(LinExpr expr, Sense sense, double rhs,
                     std::string_view label = "") {
    check_owned(expr);
    expr.normalize();
    rhs -= expr.constant();
    expr.set_constant(0.0);
    std::string lab = label.empty()
                          ? "c" + std::to_string(cons_.size())
                          : std::string(label);
    cons_.push_back(Constraint{std::move(expr), sense, rhs, std::move(lab)});
    return static_cast<int>(cons_.size() - 1);
  }

  void set_objective(LinExpr expr) {
    check_owned(expr);
    expr.normalize();
    objective_ = std::move(expr);
  }

  std::size_t num_vars() const { return vars_.size(); }
  std::size_t num_constraints() const { return cons_.size(); }
  const std::vector<Variable>& vars() const { return vars_; }
  const Variable& var(VarRef r) const {
    check_ref(r);
    return vars_[r.index];
  }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const LinExpr& objective() const { return objective_; }

  void set_bounds(VarRef r, double lb, double ub) {
    check_ref(r);
    require(lb <= ub, "set_bounds: lb > ub");
    vars_[r.index].lb = lb;
    vars_[r.index].ub = ub;
  }

  static double evaluate(const LinExpr& e, std::span<const double> x) {
    double v = e.constant();
    for (const auto& [coef, var] : e.terms()) {
      require(var.index < x.size(), "evaluate: assignment too short");
      v += coef * x[var.index];
    }
    return v;
  }

  // Absolute-tolerance feasibility check over bounds and all constraints.
  // Integrality is deliberately not checked here; the solver does that.
  bool check_feasible(std::span<const double> x, double tol = kMipFeasTol,
                      std::string* first_violation = nullptr) const {
    require(x.size() == vars_.size(),
            "check_feasible: assignment length mismatch");
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      const Variable& v = vars_[j];
      if (x[j] < v.lb - tol || x[j] > v.ub + tol) {
        if (first_violation) {
          *first_violation = detail::format(
              "bound on %s: %.12g not in [%.12g, %.12g]", v.name.c_str(),
              x[j], v.lb, v.ub);
        }
        return false;
      }
    }
    for (const Constraint& c : cons_) {
      const double lhs = evaluate(c.expr, x);
      bool ok = true;
      switch (c.sense) {
        case Sense::Le: ok = lhs <= c.rhs + tol; break;
        case Sense::Ge: ok = lhs >= c.rhs - tol; break;
        case Sense::Eq: ok = std::fabs(lhs - c.rhs) <= tol; break;
      }
      if (!ok) {
        if (first_violation) {
          *first_violation =
              detail::format("constraint %s: lhs %.12g %s rhs %.12g",
                             c.label.c_str(), lhs, sense_text(c.sense), c.rhs);
        }
        return false;
      }
    }
    return true;
  }

  bool is_integral(std::span<const double> x,
                   double tol = kIntegralityTol) const {
    require(x.size() == vars_.size(), "is_integral: assignment length mismatch");
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (vars_[j].kind == VarKind::Continuous) continue;
      if (std::fabs(x[j] - std::round(x[j])) > tol) return false;
    }
    return true;
  }

  // Deterministic LP-format text (Minimize / Subject To / Bounds / Generals /
  // Binaries / End).  Coefficients are printed with %.15g.
  std::string emit_lp_text() const {
    std::ostringstream out;
    out << "\\ comicl model: " << vars_.size() << " vars, " << cons_.size()
        << " constraints\n";
    out << "Minimize\n obj:";
    write_expr(out, objective_.terms());
    if (objective_.constant() != 0.0) {
      out << (objective_.terms().empty() ? " " : " + ")
          << num(objective_.constant());
    } else if (objective_.terms().empty()) {
      out << " 0";
    }
    out << "\nSubject To\n";
    for (const Constraint& c : cons_) {
      out << " " << c.label << ":";
      if (c.expr.terms().empty()) {
        // Degenerate row (all terms cancelled); keep it visible with an
        // explicit zero so the text remains parseable.
        out << " 0 " << (vars_.empty() ? "x" : vars_.front().name);
      } else {
        write_expr(out, c.expr.terms());
      }
      out << " " << sense_text(c.sense) << " " << num(c.rhs) << "\n";
    }
    out << "Bounds\n";
    for (const Variable& v : vars_) {
      out << " ";
      if (!std::isfinite(v.lb) && !std::isfinite(v.ub)) {
        out << v.name << " free";
      } else if (v.lb == v.ub) {
        out << v.name << " = " << num(v.lb);
      } else {
        out << (std::isfinite(v.lb) ? num(v.lb) : "-inf") << " <= " << v.name
            << " <= " << (std::isfinite(v.ub) ? num(v.ub) : "+inf");
      }
      out << "\n";
    }
    std::vector<const Variable*> generals, binaries;
    for (const Variable& v : vars_) {
      if (v.kind == VarKind::Integer) generals.push_back(&v);
      if (v.kind == VarKind::Binary) binaries.push_back(&v);
    }
    if (!generals.empty()) {
      out << "Generals\n";
      for (const auto* v : generals) out << " " << v->name << "\n";
    }
    if (!binaries.empty()) {
      out << "Binaries\n";
      for (const auto* v : binaries) out << " " << v->name << "\n";
    }
    out << "End\n";
    return out.str();
  }

 private:
  static std::atomic<std::uint32_t>& next_id() {
    static std::atomic<std::uint32_t> counter{1};
    return counter;
  }

  static void validate_name(const std::string& n) {
    for (char c : n) {
      if (std::isspace(static_cast<unsigned char>(c)) || c == ':') {
        fail("variable name '%s' contains whitespace or ':'", n.c_str());
      }
    }
  }

  void check_ref(VarRef r) const {
    if (r.model != id_ || r.index >= vars_.size()) {
      fail("variable reference (index %u, model %u) does not belong to model %u",
           r.index, r.model, id_);
    }
  }

  void check_owned(const LinExpr& e) const {
    for (const auto& t : e.terms()) check_ref(t.second);
  }

  static std::string num(double v) { return detail::format("%.15g", v); }

  void write_expr(std::ostringstream& out,
                  const std::vector<std::pair<double, VarRef>>& terms) const {
    bool first = true;
    for (const auto& [coef, var] : terms) {
      if (first) {
        out << " " << (coef < 0 ? "-" : "") << num(std::fabs(coef));
        first = false;
      } else {
        out << (coef < 0 ? " - " : " + ") << num(std::fabs(coef));
      }
      out << " " << vars_[var.index].name;
    }
  }

  std::uint32_t id_;
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  LinExpr objective_;
  std::unordered_set<std::string> used_names_;
  std::unordered_map<std::string, std::size_t> prefix_counters_;
};

}  // namespace comicl
