#pragma once

// The two benchmark decision problems and their MIP skeletons (everything
// except the learned-constraint block and the objective).
//
// Reactor design: five normalized inputs in [0,1] drive five physical
// quantities through fixed affine maps; engineering ratio limits couple the
// physical quantities, and the learned outcome (a reactor performance index)
// must land in a target band.  Costs are charged on the physical units.
//
// Basket composition: 25 commodity quantities under per-commodity pantry
// caps; a nutrition table imposes minimum nutrient totals, two commodities
// are pinned by policy, and the learned outcome (a 4-level acceptance grade)
// must reach the desired grades.  Costs are charged per commodity.

#include <string>
#include <vector>

#include "comicl/common.hpp"
#include "comicl/data.hpp"
#include "comicl/mip.hpp"
#include "comicl/oracle.hpp"

namespace comicl {

enum class ProblemKind { Reactor, Basket };

inline const char* problem_kind_text(ProblemKind k) {
  return k == ProblemKind::Reactor ? "reactor" : "basket";
}

inline ProblemKind problem_kind_from_text(const std::string& s) {
  if (s == "reactor") return ProblemKind::Reactor;
  if (s == "basket") return ProblemKind::Basket;
  throw Error("unknown problem '" + s + "'");
}

struct Benchmark {
  ProblemKind kind = ProblemKind::Reactor;
  std::string name;
  Oracle oracle;
  OutcomeSet outcome;
  std::size_t n_features = 0;
  std::size_t n_cost_terms = 0;
  std::vector<Interval> feature_box;  // decision-variable bounds = data bounds
};

// Physical ranges for the reactor quantities, in feature order:
// coolant flow v0, helium flow vHe, temperature T, tube diameter dt,
// tube length L.
inline const std::vector<Interval>& reactor_physical_ranges() {
  static const std::vector<Interval> r{
      {450.0, 1500.0}, {450.0, 1500.0}, {997.18, 1348.12}, {0.5, 2.0}, {10.0, 100.0}};
  return r;
}

inline Benchmark make_benchmark(ProblemKind kind) {
  Benchmark b;
  b.kind = kind;
  if (kind == ProblemKind::Reactor) {
    b.name = "reactor";
    b.oracle = make_reactor_oracle();
    b.outcome = reactor_outcome();
    b.n_features = 5;
    b.n_cost_terms = 5;
    b.feature_box.assign(5, Interval{0.0, 1.0});
  } else {
    b.name = "basket";
    b.oracle = make_basket_oracle();
    b.outcome = basket_outcome();
    b.n_features = kBasketCommodities;
    b.n_cost_terms = kBasketCommodities;
    b.feature_box = basket_bounds();
    b.feature_box[kBasketSaltIndex] = Interval{kBasketSaltFixed, kBasketSaltFixed};
    b.feature_box[kBasketSugarIndex] = Interval{kBasketSugarFixed, kBasketSugarFixed};
  }
  return b;
}

inline Dataset sample_benchmark_data(const Benchmark& b, std::size_t n,
                                     std::uint64_t seed, double noise_sigma) {
  return b.kind == ProblemKind::Reactor ? sample_reactor_data(n, seed, noise_sigma)
                                        : sample_basket_data(n, seed);
}

struct ProblemSkeleton {
  std::vector<VarRef> inputs;       // predictor inputs, in feature order
  std::vector<LinExpr> cost_terms;  // objective building blocks
  std::vector<std::string> cost_names;
};

namespace detail {

inline ProblemSkeleton build_reactor_skeleton(MipModel& model) {
  ProblemSkeleton s;
  const auto& phys_range = reactor_physical_ranges();
  const std::vector<std::string> phys_names{"v0", "vhe", "temp", "dt", "len"};

  std::vector<VarRef> phys;
  for (std::size_t j = 0; j < 5; ++j) {
    s.inputs.push_back(model.add_var("xn" + std::to_string(j + 1),
                                     VarKind::Continuous, 0.0, 1.0));
  }
  for (std::size_t j = 0; j < 5; ++j) {
    phys.push_back(model.add_var(phys_names[j], VarKind::Continuous,
                                 phys_range[j].lo, phys_range[j].hi));
    // physical = lo + width * normalized
    LinExpr link(phys[j]);
    link.add_term(-phys_range[j].width(), s.inputs[j]);
    model.add_constraint(std::move(link), Sense::Eq, phys_range[j].lo,
                         "scale_" + phys_names[j]);
  }

  const VarRef v0 = phys[0], vhe = phys[1], temp = phys[2], dt = phys[3],
               len = phys[4];
  // 10 <= L / dt <= 150
  model.add_constraint(LinExpr(len) - LinExpr(dt) * 10.0, Sense::Ge, 0.0,
                       "len_dt_min");
  model.add_constraint(LinExpr(len) - LinExpr(dt) * 150.0, Sense::Le, 0.0,
                       "len_dt_max");
  // 0.75 <= v0 / vHe <= 3
  model.add_constraint(LinExpr(v0) - LinExpr(vhe) * 0.75, Sense::Ge, 0.0,
                       "flow_ratio_min");
  model.add_constraint(LinExpr(v0) - LinExpr(vhe) * 3.0, Sense::Le, 0.0,
                       "flow_ratio_max");
  // 20 <= v0 / L <= 120
  model.add_constraint(LinExpr(v0) - LinExpr(len) * 20.0, Sense::Ge, 0.0,
                       "flow_len_min");
  model.add_constraint(LinExpr(v0) - LinExpr(len) * 120.0, Sense::Le, 0.0,
                       "flow_len_max");
  // v0 <= 1.1 T
  model.add_constraint(LinExpr(v0) - LinExpr(temp) * 1.1, Sense::Le, 0.0,
                       "flow_temp_cap");

  for (std::size_t j = 0; j < 5; ++j) {
    s.cost_terms.emplace_back(phys[j]);
    s.cost_names.push_back(phys_names[j]);
  }
  return s;
}

inline ProblemSkeleton build_basket_skeleton(MipModel& model) {
  ProblemSkeleton s;
  const std::vector<Interval> box = basket_bounds();
  for (std::size_t m = 0; m < kBasketCommodities; ++m) {
    s.inputs.push_back(model.add_var("c" + std::to_string(m + 1),
                                     VarKind::Continuous, box[m].lo, box[m].hi));
  }
  // Policy-fixed commodities: pinned bounds plus explicit rows.
  model.set_bounds(s.inputs[kBasketSaltIndex], kBasketSaltFixed, kBasketSaltFixed);
  model.set_bounds(s.inputs[kBasketSugarIndex], kBasketSugarFixed,
                   kBasketSugarFixed);
  model.add_constraint(LinExpr(s.inputs[kBasketSaltIndex]), Sense::Eq,
                       kBasketSaltFixed, "salt_policy");
  model.add_constraint(LinExpr(s.inputs[kBasketSugarIndex]), Sense::Eq,
                       kBasketSugarFixed, "sugar_policy");

  const NutritionTable tab = make_nutrition_table();
  for (std::size_t l = 0; l < kBasketNutrients; ++l) {
    LinExpr row;
    for (std::size_t m = 0; m < kBasketCommodities; ++m) {
      if (tab.at(l, m) != 0.0) row.add_term(tab.at(l, m), s.inputs[m]);
    }
    model.add_constraint(std::move(row), Sense::Ge, tab.required[l],
                         "nutrient_" + std::to_string(l + 1));
  }

  for (std::size_t m = 0; m < kBasketCommodities; ++m) {
    s.cost_terms.emplace_back(s.inputs[m]);
    s.cost_names.push_back("c" + std::to_string(m + 1));
  }
  return s;
}

}  // namespace detail

inline ProblemSkeleton build_skeleton(MipModel& model, const Benchmark& b) {
  return b.kind == ProblemKind::Reactor ? detail::build_reactor_skeleton(model)
                                        : detail::build_basket_skeleton(model);
}

// Per-instance cost vector: one weight per cost term, uniform on [0.5, 2].
inline std::vector<double> sample_cost_vector(const Benchmark& b,
                                              std::uint64_t root_seed,
                                              std::size_t instance) {
  Rng rng(derive_seed(root_seed, "cost", instance));
  std::vector<double> c(b.n_cost_terms);
  for (double& v : c) v = rng.uniform(0.5, 2.0);
  return c;
}

}  // namespace comicl
