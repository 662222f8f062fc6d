#pragma once

// Ground-truth response functions for the two synthetic benchmarks, the
// samplers that generate datasets from them, and the outcome-set predicate
// used to audit solutions.
//
// The oracles are noiseless nonlinear functions; dataset targets add
// observation noise (regression) on top, but feasibility audits always use
// the noiseless value.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "comicl/common.hpp"
#include "comicl/data.hpp"
#include "comicl/rng.hpp"

namespace comicl {

constexpr double kPi = 3.14159265358979323846;

// The acceptable outcome window: a target interval for regression, a set of
// desired classes for classification.
struct OutcomeSet {
  TaskKind task = TaskKind::Regression;
  Interval range{50.0, 100.0};   // regression
  std::vector<int> desired;      // classification, sorted ascending
  int n_classes = 0;

  bool contains_value(double y) const {
    require(task == TaskKind::Regression, "contains_value: not a regression outcome");
    return range.contains(y);
  }
  bool contains_class(int k) const {
    require(task == TaskKind::Classification, "contains_class: not a classification outcome");
    for (int d : desired) {
      if (d == k) return true;
    }
    return false;
  }
  std::vector<int> undesired() const {
    std::vector<int> out;
    for (int k = 0; k < n_classes; ++k) {
      if (!contains_class(k)) out.push_back(k);
    }
    return out;
  }
};

// Ground truth for a benchmark.  For classification, value() is a score in
// (0,1) that class_of() cuts at the thresholds, with boundary scores
// assigned to the higher class.
class Oracle {
 public:
  TaskKind task = TaskKind::Regression;
  std::string definition_id;
  std::size_t n_features = 0;
  std::vector<double> class_thresholds;
  std::vector<double> taste;  // basket linear taste weights

  double value(std::span<const double> x) const {
    require(x.size() == n_features, "oracle input has wrong dimension");
    if (definition_id == "synth-reactor-v1") {
      return 60.0 * x[0] * x[1] + 25.0 * std::sin(2.0 * kPi * x[2]) +
             15.0 * x[3] - 10.0 * x[4] * x[4] + 10.0;
    }
    if (definition_id == "synth-basket-v1") {
      double z = kBasketBias;
      for (std::size_t m = 0; m < n_features; ++m) z += taste[m] * x[m];
      z += kBasketWave1 * std::sin(x[2] + x[9]);
      z += kBasketWave2 * std::sin(0.7 * x[14] - 0.4 * x[17]);
      z = (z - kBasketCenter) / kBasketScale;
      return 1.0 / (1.0 + std::exp(-z));
    }
    throw Error("unknown oracle definition: " + definition_id);
  }

  int class_of(std::span<const double> x) const {
    require(task == TaskKind::Classification, "class_of: not a classification oracle");
    return class_from_score(value(x), class_thresholds);
  }

  // Thresholds ascending; a score exactly on a threshold belongs to the
  // higher class.
  static int class_from_score(double score, std::span<const double> thresholds) {
    int k = 0;
    for (double t : thresholds) {
      if (score >= t) ++k;
    }
    return k;
  }

  // Basket score shaping constants; frozen so datasets are reproducible.
  static constexpr double kBasketBias = 0.0;
  static constexpr double kBasketWave1 = 1.1;
  static constexpr double kBasketWave2 = 0.9;
  static constexpr double kBasketCenter = 5.4;  // empirical median of the raw score
  static constexpr double kBasketScale = 2.2;   // keeps all four grades populated
};

// -------------------------------------------------------------------------
// Flow-reactor benchmark (5 normalized inputs on [0,1]).

inline Oracle make_reactor_oracle() {
  Oracle o;
  o.task = TaskKind::Regression;
  o.definition_id = "synth-reactor-v1";
  o.n_features = 5;
  return o;
}

inline OutcomeSet reactor_outcome() {
  OutcomeSet s;
  s.task = TaskKind::Regression;
  s.range = Interval{50.0, 100.0};
  return s;
}

// Samples X uniformly on the unit box, then adds N(0, sigma) noise to the
// oracle response.  Draw order: all feature rows first (row-major), then one
// noise value per row, so the design matrix is identical across sigma.
inline Dataset sample_reactor_data(std::size_t n, std::uint64_t seed,
                                   double noise_sigma) {
  const Oracle oracle = make_reactor_oracle();
  Dataset d;
  d.task = TaskKind::Regression;
  d.n_rows = n;
  d.n_features = 5;
  d.feature_names = {"x1", "x2", "x3", "x4", "x5"};
  d.bounds.assign(5, Interval{0.0, 1.0});
  d.features.resize(n * 5);
  Rng fx(derive_seed(seed, "features"));
  for (auto& v : d.features) v = fx.uniform();
  d.targets.resize(n);
  Rng noise(derive_seed(seed, "noise"));
  for (std::size_t i = 0; i < n; ++i) {
    d.targets[i] = oracle.value(d.row(i)) + noise.normal(0.0, noise_sigma);
  }
  d.validate();
  return d;
}

// -------------------------------------------------------------------------
// Food-basket benchmark (25 commodity quantities).

constexpr std::size_t kBasketCommodities = 25;
constexpr std::size_t kBasketNutrients = 12;
constexpr std::size_t kBasketSaltIndex = 5;
constexpr std::size_t kBasketSugarIndex = 20;
constexpr double kBasketSaltFixed = 5.0;
constexpr double kBasketSugarFixed = 20.0;
// Pantry caps: free commodities are capped at kBasketFreeHi; the two policy
// commodities get their own envelopes around the deployed levels.
constexpr double kBasketFreeHi = 16.0;
constexpr double kBasketSaltHi = 8.0;
constexpr double kBasketSugarHi = 24.0;
// Historical-basket sampler shape: weights are uniforms raised to this power
// (larger exponent concentrates a basket's budget on fewer commodities, the
// texture real purchase data shows), plus a floor that keeps every commodity
// present in trace amounts.  The budget sweeps a wide range so the score
// distribution spans all four grades.
constexpr double kBasketSparsity = 6.0;
constexpr double kBasketWeightFloor = 0.01;
constexpr double kBasketBudgetLo = 2.0;
constexpr double kBasketBudgetHi = 36.0;

inline std::vector<Interval> basket_bounds() {
  std::vector<Interval> b(kBasketCommodities, Interval{0.0, kBasketFreeHi});
  b[kBasketSaltIndex] = Interval{0.0, kBasketSaltHi};
  b[kBasketSugarIndex] = Interval{0.0, kBasketSugarHi};
  return b;
}

inline Oracle make_basket_oracle() {
  Oracle o;
  o.task = TaskKind::Classification;
  o.definition_id = "synth-basket-v1";
  o.n_features = kBasketCommodities;
  o.class_thresholds = {0.25, 0.5, 0.75};
  // Deterministic mixed-sign taste weights for the free commodities; the
  // fixed commodities get small fixed weights.
  o.taste.assign(kBasketCommodities, 0.0);
  Rng rng(derive_seed(4242, "basket-taste"));
  for (std::size_t m = 0; m < kBasketCommodities; ++m) {
    o.taste[m] = rng.uniform(-1.0, 1.5);
  }
  o.taste[kBasketSaltIndex] = -0.10;
  o.taste[kBasketSugarIndex] = 0.05;
  return o;
}

inline OutcomeSet basket_outcome() {
  OutcomeSet s;
  s.task = TaskKind::Classification;
  s.n_classes = 4;
  s.desired = {2, 3};
  return s;
}

// Nutrient content per commodity (row-major nutrient x commodity) and the
// per-nutrient requirement.  Deterministically generated; requirements are
// 80% of the content of a reference basket so typical sampled baskets meet
// most requirements with a little slack.
struct NutritionTable {
  std::vector<double> content;  // kBasketNutrients x kBasketCommodities
  std::vector<double> required; // kBasketNutrients

  double at(std::size_t nutrient, std::size_t commodity) const {
    return content[nutrient * kBasketCommodities + commodity];
  }
};

inline NutritionTable make_nutrition_table() {
  NutritionTable t;
  t.content.resize(kBasketNutrients * kBasketCommodities);
  Rng rng(derive_seed(4242, "basket-nutrition"));
  for (std::size_t l = 0; l < kBasketNutrients; ++l) {
    for (std::size_t m = 0; m < kBasketCommodities; ++m) {
      const double present = rng.uniform();      // always two draws per cell
      const double amount = rng.uniform(0.2, 2.0);
      t.content[l * kBasketCommodities + m] = present < 0.3 ? 0.0 : amount;
    }
  }
  // Reference basket: free commodities at the mean sampled level, fixed
  // commodities at their policy levels.
  std::vector<double> ref(kBasketCommodities, 12.0 / 23.0);
  ref[kBasketSaltIndex] = kBasketSaltFixed;
  ref[kBasketSugarIndex] = kBasketSugarFixed;
  t.required.resize(kBasketNutrients);
  for (std::size_t l = 0; l < kBasketNutrients; ++l) {
    double dot = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t m = 0; m < kBasketCommodities; ++m) {
      dot += t.at(l, m) * ref[m];
      if (t.at(l, m) != 0.0) ++nonzero;
    }
    require(nonzero >= 5, "nutrition table row too sparse");
    t.required[l] = 0.8 * dot;
  }
  return t;
}

// Samples historical baskets: the two policy commodities sit near their
// deployed levels, the rest share a uniformly drawn budget proportionally to
// sparsity-shaped weights (uniform^kBasketSparsity + floor), so most baskets
// concentrate on a handful of dominant commodities at realistic purchase
// levels while every commodity appears in trace amounts.  Quantities are
// capped at the pantry bound.  Labels come from the noiseless oracle class.
// Draw order per row: 23 weight uniforms (ascending commodity index), budget,
// salt, sugar.
inline Dataset sample_basket_data(std::size_t n, std::uint64_t seed) {
  const Oracle oracle = make_basket_oracle();
  Dataset d;
  d.task = TaskKind::Classification;
  d.n_rows = n;
  d.n_features = kBasketCommodities;
  for (std::size_t m = 0; m < kBasketCommodities; ++m) {
    d.feature_names.push_back("c" + std::to_string(m + 1));
  }
  d.bounds = basket_bounds();
  d.features.resize(n * kBasketCommodities);
  d.targets.resize(n);
  d.n_classes = 4;
  Rng rng(derive_seed(seed, "features"));
  std::vector<double> w(kBasketCommodities);
  for (std::size_t i = 0; i < n; ++i) {
    double wsum = 0.0;
    for (std::size_t m = 0; m < kBasketCommodities; ++m) {
      if (m == kBasketSaltIndex || m == kBasketSugarIndex) continue;
      w[m] = std::pow(rng.uniform(), kBasketSparsity) + kBasketWeightFloor;
      wsum += w[m];
    }
    const double budget = rng.uniform(kBasketBudgetLo, kBasketBudgetHi);
    double* row = &d.features[i * kBasketCommodities];
    for (std::size_t m = 0; m < kBasketCommodities; ++m) {
      if (m == kBasketSaltIndex || m == kBasketSugarIndex) continue;
      row[m] = std::min(budget * w[m] / wsum, kBasketFreeHi);
    }
    row[kBasketSaltIndex] = rng.uniform(4.0, 6.0);
    row[kBasketSugarIndex] = rng.uniform(18.0, 22.0);
    d.targets[i] = oracle.class_of(d.row(i));
  }
  d.validate();
  return d;
}

// Noiseless ground-truth feasibility of a candidate input.
inline bool oracle_feasible(const Oracle& oracle, std::span<const double> x,
                            const OutcomeSet& outcome) {
  if (oracle.task == TaskKind::Regression) {
    return outcome.contains_value(oracle.value(x));
  }
  return outcome.contains_class(oracle.class_of(x));
}

}  // namespace comicl
