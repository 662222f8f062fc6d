// Tests for the predictor-to-MIP encoders.  The key oracle: with the inputs
// pinned to a point, minimizing and maximizing the encoded output over the
// MIP must both reproduce the native forward pass, proving the constraint
// block admits exactly the function graph and nothing else.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "comicl/branch_and_bound.hpp"
#include "comicl/data.hpp"
#include "comicl/encode.hpp"
#include "comicl/mlp.hpp"
#include "comicl/oracle.hpp"
#include "comicl/rng.hpp"
#include "comicl/simplex.hpp"
#include "comicl/tree.hpp"

using namespace comicl;

namespace {

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.n_rows);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

double solve_min(MipModel& model, const LinExpr& expr) {
  model.set_objective(expr);
  SolveOptions opt;
  opt.rel_gap = 0.0;
  SolveResult res = solve_mip(model, opt);
  REQUIRE(res.status == MipStatus::Optimal);
  return res.objective;
}

double solve_max(MipModel& model, const LinExpr& expr) {
  LinExpr neg = LinExpr(0.0) - expr;
  return -solve_min(model, neg);
}

// Pins the inputs to a point, checks min == max == native, restores bounds.
void require_equivalent_at(MipModel& model, std::span<const VarRef> inputs,
                           const LinExpr& out, std::span<const double> x,
                           double native, std::span<const Interval> box) {
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    model.set_bounds(inputs[j], x[j], x[j]);
  }
  const double lo = solve_min(model, out);
  const double hi = solve_max(model, out);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    model.set_bounds(inputs[j], box[j].lo, box[j].hi);
  }
  REQUIRE(lo == Catch::Approx(native).margin(1e-6));
  REQUIRE(hi == Catch::Approx(native).margin(1e-6));
}

std::vector<VarRef> add_inputs(MipModel& model, std::span<const Interval> box) {
  std::vector<VarRef> vars;
  for (std::size_t j = 0; j < box.size(); ++j) {
    vars.push_back(model.add_var("x" + std::to_string(j), VarKind::Continuous,
                                 box[j].lo, box[j].hi));
  }
  return vars;
}

const std::vector<Interval> kUnitBox5(5, Interval{0.0, 1.0});

}  // namespace

// ---------------------------------------------------------------------------
// Interval bound propagation

TEST_CASE("propagated intervals contain every reachable pre-activation") {
  Rng point_rng(551);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Mlp net = detail::init_mlp(4, {7, 5}, 2, seed);
    // Stretch the weights so both stable and unstable units appear.
    for (Layer& L : net.layers) {
      for (double& w : L.w) w *= 3.0;
      for (double& b : L.b) b = 0.3;
    }
    const std::vector<Interval> box{{-1, 2}, {0, 1}, {-2, -1}, {0.5, 3}};
    const auto bounds = propagate_bounds(net, box);
    REQUIRE(bounds.size() == 3);
    REQUIRE(bounds[0].size() == 7);
    REQUIRE(bounds[2].size() == 2);

    for (int trial = 0; trial < 800; ++trial) {
      std::vector<double> cur(4);
      for (std::size_t j = 0; j < 4; ++j) {
        cur[j] = point_rng.uniform(box[j].lo, box[j].hi);
      }
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& L = net.layers[l];
        std::vector<double> pre(L.out);
        for (std::size_t o = 0; o < L.out; ++o) {
          double s = L.b[o];
          for (std::size_t i = 0; i < L.in; ++i) s += L.w[o * L.in + i] * cur[i];
          pre[o] = s;
          REQUIRE(s >= bounds[l][o].lo - 1e-9);
          REQUIRE(s <= bounds[l][o].hi + 1e-9);
        }
        cur.resize(L.out);
        for (std::size_t o = 0; o < L.out; ++o) {
          cur[o] = (l + 1 < net.layers.size()) ? std::max(0.0, pre[o]) : pre[o];
        }
      }
    }
  }
}

TEST_CASE("bound propagation rejects unbounded or mismatched boxes") {
  Mlp net = detail::init_mlp(2, {3}, 1, 9);
  std::vector<Interval> bad{{0, kInf}, {0, 1}};
  REQUIRE_THROWS(propagate_bounds(net, bad));
  std::vector<Interval> short_box{{0, 1}};
  REQUIRE_THROWS(propagate_bounds(net, short_box));
}

// ---------------------------------------------------------------------------
// ReLU network encoding

TEST_CASE("encoded network reproduces the forward pass at pinned inputs") {
  Dataset data = sample_reactor_data(200, 77, 0.3);
  MlpTrainConfig cfg;
  cfg.hidden = {6};
  cfg.epochs = 150;
  cfg.seed = 21;
  Mlp net = train_mlp(data, all_rows(data), cfg);

  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, kUnitBox5);
  EncodedPredictor enc = encode_mlp(model, net, inputs, "nn");
  REQUIRE(enc.outputs.size() == 1);
  REQUIRE(enc.n_binaries + enc.n_stable_on + enc.n_stable_off == 6);
  REQUIRE(enc.n_rows == 3 * enc.n_binaries);

  Rng rng(31);
  for (int p = 0; p < 40; ++p) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(0, 1);
    require_equivalent_at(model, inputs, enc.outputs[0], x,
                          predict_scalar(net, x), kUnitBox5);
  }
}

TEST_CASE("deep network with mixed stability encodes exactly") {
  // Two hidden layers; inflated weights create stable-off and stable-on
  // units alongside unstable ones.
  Mlp net = detail::init_mlp(3, {5, 4}, 1, 77);
  for (Layer& L : net.layers) {
    for (double& w : L.w) w *= 2.5;
  }
  net.layers[0].b = {1.5, -1.5, 0.0, 2.5, -2.5};

  const std::vector<Interval> box{{-1, 1}, {-1, 1}, {-1, 1}};
  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, box);
  EncodedPredictor enc = encode_mlp(model, net, inputs, "nn");
  REQUIRE(enc.n_binaries + enc.n_stable_on + enc.n_stable_off == 9);

  Rng rng(32);
  for (int p = 0; p < 25; ++p) {
    std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    require_equivalent_at(model, inputs, enc.outputs[0], x,
                          predict_scalar(net, x), box);
  }

  // Output bounds are sound for the encoded expression.
  const double out_min = solve_min(model, enc.outputs[0]);
  const double out_max = solve_max(model, enc.outputs[0]);
  REQUIRE(out_min >= enc.output_bounds[0].lo - 1e-7);
  REQUIRE(out_max <= enc.output_bounds[0].hi + 1e-7);
}

TEST_CASE("multi-output network encodes every logit") {
  Dataset data = sample_basket_data(300, 12);
  MlpTrainConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 120;
  cfg.learning_rate = 0.1;
  cfg.seed = 4;
  Mlp net = train_mlp(data, all_rows(data), cfg);
  REQUIRE(net.n_outputs() == 4);

  const std::vector<Interval> box = basket_bounds();
  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, box);
  EncodedPredictor enc = encode_mlp(model, net, inputs, "nn");
  REQUIRE(enc.outputs.size() == 4);

  Rng rng(41);
  std::vector<double> x(kBasketCommodities);
  for (std::size_t m = 0; m < x.size(); ++m) x[m] = rng.uniform(0.0, box[m].hi);
  const std::vector<double> logits = predict_mlp(net, x);
  for (std::size_t j = 0; j < inputs.size(); ++j) model.set_bounds(inputs[j], x[j], x[j]);
  for (std::size_t k = 0; k < 4; ++k) {
    REQUIRE(solve_min(model, enc.outputs[k]) == Catch::Approx(logits[k]).margin(1e-6));
    REQUIRE(solve_max(model, enc.outputs[k]) == Catch::Approx(logits[k]).margin(1e-6));
  }
}

TEST_CASE("network encoding demands finite input bounds") {
  Mlp net = detail::init_mlp(2, {3}, 1, 5);
  MipModel model;
  std::vector<VarRef> inputs{
      model.add_var("x0", VarKind::Continuous, 0.0, kInf),
      model.add_var("x1", VarKind::Continuous, 0.0, 1.0)};
  REQUIRE_THROWS_WITH(encode_mlp(model, net, inputs, "nn"),
                      Catch::Matchers::ContainsSubstring("finite bounds"));
}

// ---------------------------------------------------------------------------
// Uncertainty clamp

TEST_CASE("uncertainty clamp encodes max(net, floor)") {
  // Identity net: raw = x over [-2, 2].
  Mlp ident;
  ident.layers.push_back(Layer{1, 1, {1.0}, {0.0}});
  UncertaintyModel u;
  u.net = ident;

  const std::vector<Interval> box{{-2.0, 2.0}};
  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, box);
  EncodedPredictor enc = encode_uncertainty(model, u, inputs, "unc");
  REQUIRE(enc.outputs.size() == 1);
  REQUIRE(enc.n_binaries == 1);  // clamp is ambiguous over this box
  REQUIRE(enc.output_bounds[0].lo == kUncertaintyFloor);
  REQUIRE(enc.output_bounds[0].hi == 2.0);

  for (double xv : {-1.5, -0.25, 0.0005, 0.5, 1.9}) {
    std::vector<double> x{xv};
    require_equivalent_at(model, inputs, enc.outputs[0], x,
                          predict_uncertainty(u, x), box);
  }
}

TEST_CASE("uncertainty clamp degenerates cleanly when one branch is dead") {
  Mlp ident;
  ident.layers.push_back(Layer{1, 1, {1.0}, {0.0}});
  UncertaintyModel u;
  u.net = ident;

  SECTION("always above the floor: clamp passes through") {
    const std::vector<Interval> box{{0.5, 2.0}};
    MipModel model;
    const std::vector<VarRef> inputs = add_inputs(model, box);
    EncodedPredictor enc = encode_uncertainty(model, u, inputs, "unc");
    REQUIRE(enc.n_binaries == 0);
    std::vector<double> x{1.25};
    require_equivalent_at(model, inputs, enc.outputs[0], x, 1.25, box);
  }
  SECTION("always below the floor: constant") {
    const std::vector<Interval> box{{-2.0, -0.5}};
    MipModel model;
    const std::vector<VarRef> inputs = add_inputs(model, box);
    EncodedPredictor enc = encode_uncertainty(model, u, inputs, "unc");
    REQUIRE(enc.n_binaries == 0);
    std::vector<double> x{-1.0};
    require_equivalent_at(model, inputs, enc.outputs[0], x, kUncertaintyFloor, box);
  }
}

// ---------------------------------------------------------------------------
// Tree-ensemble encoding

TEST_CASE("single tree encoding matches native prediction everywhere") {
  Dataset data = sample_reactor_data(150, 5, 0.2);
  CartConfig cfg;
  cfg.max_depth = 4;
  cfg.min_samples_split = 5;
  Ensemble cart = fit_cart(data, all_rows(data), cfg);

  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, kUnitBox5);
  EncodedPredictor enc = encode_tree_ensemble(model, cart, inputs, "tr");

  Rng rng(61);
  for (int p = 0; p < 30; ++p) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(0, 1);
    require_equivalent_at(model, inputs, enc.outputs[0], x,
                          predict_ensemble(cart, x), kUnitBox5);
  }

  // Output bounds bracket the range of leaf values.
  double lo = kInf, hi = -kInf;
  for (const TreeNode& n : cart.trees.front().nodes) {
    if (!n.leaf) continue;
    lo = std::min(lo, n.value);
    hi = std::max(hi, n.value);
  }
  REQUIRE(enc.output_bounds[0].lo == lo);
  REQUIRE(enc.output_bounds[0].hi == hi);
}

TEST_CASE("forest encoding shares split binaries across trees") {
  Dataset data = sample_reactor_data(120, 6, 0.2);
  ForestConfig fc;
  fc.n_trees = 5;
  fc.max_depth = 3;
  fc.seed = 2;
  Ensemble forest = fit_forest(data, all_rows(data), fc);

  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, kUnitBox5);
  EncodedPredictor enc = encode_tree_ensemble(model, forest, inputs, "tr");

  // Shared thresholds: binaries = distinct (feature, threshold) + leaves.
  std::set<std::pair<int, double>> distinct;
  std::size_t leaves = 0;
  for (const Tree& t : forest.trees) {
    for (const TreeNode& n : t.nodes) {
      if (n.leaf) {
        ++leaves;
      } else {
        distinct.insert({n.feature, n.threshold});
      }
    }
  }
  REQUIRE(enc.n_binaries == distinct.size() + leaves);

  Rng rng(62);
  for (int p = 0; p < 15; ++p) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(0, 1);
    require_equivalent_at(model, inputs, enc.outputs[0], x,
                          predict_ensemble(forest, x), kUnitBox5);
  }
}

TEST_CASE("boosted encoding matches native prediction") {
  Dataset data = sample_reactor_data(120, 7, 0.2);
  GbtConfig gc;
  gc.n_stages = 5;
  gc.max_depth = 3;
  Ensemble gbt = fit_gbt(data, all_rows(data), gc);

  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, kUnitBox5);
  EncodedPredictor enc = encode_tree_ensemble(model, gbt, inputs, "tr");

  Rng rng(63);
  for (int p = 0; p < 15; ++p) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(0, 1);
    require_equivalent_at(model, inputs, enc.outputs[0], x,
                          predict_ensemble(gbt, x), kUnitBox5);
  }
}

TEST_CASE("linear-leaf encoding multiplies leaf responses correctly") {
  Dataset data = sample_reactor_data(150, 8, 0.2);
  LmdtConfig lc;
  lc.max_depth = 3;
  lc.min_samples_split = 15;
  Ensemble lmdt = fit_lmdt(data, all_rows(data), lc);
  REQUIRE(lmdt.linear_leaves);

  MipModel model;
  const std::vector<VarRef> inputs = add_inputs(model, kUnitBox5);
  EncodedPredictor enc = encode_tree_ensemble(model, lmdt, inputs, "tr");
  REQUIRE(enc.n_aux_continuous > 0);  // one product variable per leaf

  Rng rng(64);
  for (int p = 0; p < 20; ++p) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(0, 1);
    require_equivalent_at(model, inputs, enc.outputs[0], x,
                          predict_ensemble(lmdt, x), kUnitBox5);
  }
}

TEST_CASE("tree encoding constraint census on a hand-built ensemble") {
  // Two stumps splitting the same feature at the same threshold: the split
  // binary must be shared.
  Tree stump1;
  stump1.nodes.resize(3);
  stump1.nodes[0] = TreeNode{false, 0, 0.5, 1, 2, 0.0, {}, 0.0};
  stump1.nodes[1] = TreeNode{true, -1, 0.0, -1, -1, 10.0, {}, 0.0};
  stump1.nodes[2] = TreeNode{true, -1, 0.0, -1, -1, 20.0, {}, 0.0};
  Tree stump2 = stump1;
  stump2.nodes[1].value = 30.0;
  stump2.nodes[2].value = 50.0;

  Ensemble pair;
  pair.combine = Combine::Average;
  pair.trees = {stump1, stump2};
  pair.n_features = 1;

  MipModel model;
  std::vector<VarRef> inputs{model.add_var("x0", VarKind::Continuous, 0.0, 1.0)};
  const std::size_t rows_before = model.num_constraints();
  EncodedPredictor enc = encode_tree_ensemble(model, pair, inputs, "tr");

  REQUIRE(enc.n_binaries == 1 + 4);  // one shared split, four leaves
  // Rows: 2 linking + per tree (1 sum-to-one + 2 path rows) = 2 + 6.
  REQUIRE(enc.n_rows == 8);
  REQUIRE(model.num_constraints() - rows_before == enc.n_rows);

  std::vector<double> left{0.2}, right{0.8};
  const std::vector<Interval> box{{0.0, 1.0}};
  require_equivalent_at(model, inputs, enc.outputs[0], left, 20.0, box);
  require_equivalent_at(model, inputs, enc.outputs[0], right, 35.0, box);
}

// ---------------------------------------------------------------------------
// Conformal reformulations

TEST_CASE("regression conformal block adds exactly the two interval rows") {
  MipModel model;
  const VarRef x = model.add_var("x", VarKind::Continuous, 0.0, 1.0);
  LinExpr h = LinExpr(x);
  h *= 2.0;
  h += LinExpr(1.0);          // h = 2x + 1 in [1, 3]
  const LinExpr u(0.25);      // constant uncertainty

  Calibration calib;
  calib.q_hat = 1.5;
  const std::size_t before = model.num_constraints();
  ConformalBlock blk = add_regression_conformal(model, h, u, calib,
                                                Interval{2.0, 6.0}, "conf");
  REQUIRE(blk.n_rows == 2);
  REQUIRE(model.num_constraints() - before == 2);
  REQUIRE(blk.q_hat == 1.5);

  // Lower row: 2x + 1 - 1.5 * 0.25 >= 2  =>  x >= 0.6875.
  REQUIRE(solve_min(model, LinExpr(x)) == Catch::Approx(0.6875).margin(1e-9));
}

TEST_CASE("group-conditional regression applies the out-of-range quantile") {
  MipModel model;
  const VarRef x = model.add_var("x", VarKind::Continuous, 0.0, 1.0);
  LinExpr h = LinExpr(x);
  h *= 2.0;
  h += LinExpr(1.0);
  const LinExpr u(0.25);

  Calibration calib;
  calib.mondrian = true;
  calib.q_hat = 1.5;  // marginal, must NOT be used
  calib.groups = {GroupQuantile{0, 3.0, 10}, GroupQuantile{1, 1.0, 10}};
  ConformalBlock blk = add_regression_conformal(model, h, u, calib,
                                                Interval{2.0, 6.0}, "conf");
  REQUIRE(blk.q_hat == 3.0);
  // Lower row: 2x + 1 - 3 * 0.25 >= 2  =>  x >= 0.875.
  REQUIRE(solve_min(model, LinExpr(x)) == Catch::Approx(0.875).margin(1e-9));
}

TEST_CASE("infinite quantiles raise the calibration-infeasible error") {
  MipModel model;
  const VarRef x = model.add_var("x", VarKind::Continuous, 0.0, 1.0);
  const LinExpr h(x);
  const LinExpr u(0.5);

  Calibration calib;  // default q_hat is +inf
  REQUIRE_THROWS_AS(add_regression_conformal(model, h, u, calib,
                                             Interval{0.0, 1.0}, "c1"),
                    CalibrationInfeasibleError);
  REQUIRE_THROWS_WITH(add_regression_conformal(model, h, u, calib,
                                               Interval{0.0, 1.0}, "c2"),
                      Catch::Matchers::ContainsSubstring("calibration-infeasible"));

  Calibration mond;
  mond.mondrian = true;
  mond.q_hat = 1.0;
  mond.groups = {GroupQuantile{0, kInf, 2}, GroupQuantile{1, 1.0, 50}};
  REQUIRE_THROWS_AS(add_regression_conformal(model, h, u, mond,
                                             Interval{0.0, 1.0}, "c3"),
                    CalibrationInfeasibleError);
}

namespace {

struct LogitFixture {
  MipModel model;
  std::vector<VarRef> vars;
  std::vector<LinExpr> logits;
  std::vector<Interval> bounds;

  LogitFixture() {
    for (int k = 0; k < 3; ++k) {
      vars.push_back(model.add_var("y" + std::to_string(k),
                                   VarKind::Continuous, -3.0, 3.0));
      logits.emplace_back(vars.back());
      bounds.push_back(Interval{-3.0, 3.0});
    }
  }
};

OutcomeSet classes_outcome(std::vector<int> desired) {
  OutcomeSet o;
  o.task = TaskKind::Classification;
  o.n_classes = 3;
  o.desired = std::move(desired);
  return o;
}

}  // namespace

TEST_CASE("classification conformal block pins set membership") {
  LogitFixture f;
  Calibration calib;
  calib.kind = ScoreKind::NegativeTrueLogit;
  calib.q_hat = 0.5;

  const OutcomeSet outcome = classes_outcome({2});
  const double m = default_big_m(3.0);
  REQUIRE(m == 12.0);

  ConformalBlock blk = add_classification_conformal(
      f.model, f.logits, f.bounds, calib, outcome, m, "cc");
  REQUIRE(blk.n_binaries == 3);
  REQUIRE(blk.n_rows == 7);  // two per class + non-emptiness
  REQUIRE(blk.required_big_m ==
          Catch::Approx(3.0 + 0.5 + kClassMarginEps).margin(1e-12));

  // Undesired classes are pushed strictly out of the conformal set.
  REQUIRE(solve_max(f.model, f.logits[0]) ==
          Catch::Approx(-0.5 - kClassMarginEps).margin(1e-9));
  // The only desired class must be in the set: logit_2 >= -q.
  REQUIRE(solve_min(f.model, f.logits[2]) == Catch::Approx(-0.5).margin(1e-9));
}

TEST_CASE("classification conformal block applies per-group quantiles") {
  LogitFixture f;
  Calibration calib;
  calib.kind = ScoreKind::NegativeTrueLogit;
  calib.mondrian = true;
  calib.q_hat = 99.0;  // marginal, must not be used
  calib.groups = {GroupQuantile{0, 0.25, 40}, GroupQuantile{1, 0.75, 40}};

  ConformalBlock blk = add_classification_conformal(
      f.model, f.logits, f.bounds, calib, classes_outcome({2}), 12.0, "cc");
  REQUIRE(blk.q_class == std::vector<double>{0.25, 0.25, 0.75});
  REQUIRE(solve_max(f.model, f.logits[0]) ==
          Catch::Approx(-0.25 - kClassMarginEps).margin(1e-9));
  REQUIRE(solve_min(f.model, f.logits[2]) == Catch::Approx(-0.75).margin(1e-9));
}

TEST_CASE("classification conformal block rejects an undersized big-M") {
  LogitFixture f;
  Calibration calib;
  calib.kind = ScoreKind::NegativeTrueLogit;
  calib.q_hat = 0.5;
  REQUIRE_THROWS_WITH(
      add_classification_conformal(f.model, f.logits, f.bounds, calib,
                                   classes_outcome({2}), 3.0, "cc"),
      Catch::Matchers::ContainsSubstring("below the propagated requirement"));
}

TEST_CASE("classification conformal block propagates infinite quantiles") {
  LogitFixture f;
  Calibration calib;
  calib.kind = ScoreKind::NegativeTrueLogit;
  calib.mondrian = true;
  calib.groups = {GroupQuantile{0, 0.5, 3}, GroupQuantile{1, kInf, 2}};
  REQUIRE_THROWS_AS(
      add_classification_conformal(f.model, f.logits, f.bounds, calib,
                                   classes_outcome({2}), 100.0, "cc"),
      CalibrationInfeasibleError);
}

TEST_CASE("argmax selection forces a desired winner") {
  SECTION("single desired class dominates strictly") {
    LogitFixture f;
    add_argmax_selection(f.model, f.logits, f.bounds, classes_outcome({1}), "am");
    REQUIRE(solve_max(f.model, f.logits[0]) ==
            Catch::Approx(3.0 - kClassMarginEps).margin(1e-9));
    REQUIRE(solve_min(f.model, f.logits[1]) ==
            Catch::Approx(-3.0 + kClassMarginEps).margin(1e-9));
  }
  SECTION("either desired class may carry the selection") {
    LogitFixture f;
    ArgmaxBlock blk = add_argmax_selection(f.model, f.logits, f.bounds,
                                           classes_outcome({1, 2}), "am");
    REQUIRE(blk.n_binaries == 2);
    REQUIRE(blk.n_rows == 3);  // one dominance row per (desired, undesired) + pick
    // Minimizing both desired logits still leaves one above logit_0.
    LinExpr both = f.logits[1];
    both += f.logits[2];
    f.model.set_bounds(f.vars[0], 1.0, 1.0);  // pin the undesired logit
    REQUIRE(solve_min(f.model, both) ==
            Catch::Approx((1.0 + kClassMarginEps) + (-3.0)).margin(1e-9));
  }
  SECTION("gate binary disarms the block") {
    LogitFixture f;
    const VarRef gate = f.model.add_var("g", VarKind::Binary, 0.0, 0.0);
    add_argmax_selection(f.model, f.logits, f.bounds, classes_outcome({1}),
                         "am", &gate);
    REQUIRE(solve_max(f.model, f.logits[0]) == Catch::Approx(3.0).margin(1e-9));
    f.model.set_bounds(gate, 1.0, 1.0);
    REQUIRE(solve_max(f.model, f.logits[0]) ==
            Catch::Approx(3.0 - kClassMarginEps).margin(1e-9));
  }
}

TEST_CASE("soft interval membership binds only when its gate is raised") {
  MipModel model;
  const VarRef x = model.add_var("x", VarKind::Continuous, 0.0, 10.0);
  const VarRef z = model.add_var("z", VarKind::Binary, 0.0, 1.0);
  const std::size_t rows = add_soft_interval_membership(
      model, LinExpr(x), Interval{0.0, 10.0}, Interval{2.0, 4.0}, z, "m");
  REQUIRE(rows == 2);

  model.set_bounds(z, 1.0, 1.0);
  REQUIRE(solve_min(model, LinExpr(x)) == Catch::Approx(2.0).margin(1e-9));
  REQUIRE(solve_max(model, LinExpr(x)) == Catch::Approx(4.0).margin(1e-9));
  model.set_bounds(z, 0.0, 0.0);
  REQUIRE(solve_min(model, LinExpr(x)) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(solve_max(model, LinExpr(x)) == Catch::Approx(10.0).margin(1e-9));

  // A range that already contains the expression bounds needs no rows.
  MipModel model2;
  const VarRef x2 = model2.add_var("x", VarKind::Continuous, 3.0, 4.0);
  const VarRef z2 = model2.add_var("z", VarKind::Binary, 0.0, 1.0);
  REQUIRE(add_soft_interval_membership(model2, LinExpr(x2), Interval{3.0, 4.0},
                                       Interval{0.0, 10.0}, z2, "m") == 0);
}
