#pragma once

// Compilation of trained predictors into mixed-integer constraint blocks, and
// the outcome-set reformulations layered on top of them.
//
// ReLU networks use the standard big-M formulation with one binary per
// *unstable* neuron; activation intervals come from interval bound
// propagation (IBP) over the decision-variable box, so every big-M constant
// is sound by construction.  Neurons whose pre-activation interval is
// entirely nonpositive contribute the constant 0, and entirely nonnegative
// ones pass their affine pre-activation through — neither consumes a binary
// or a row.
//
// Tree ensembles share one binary per distinct (feature, threshold) pair
// across all trees, ordered and chained so the relaxation stays consistent;
// each tree carries one binary per leaf plus subtree-sum path constraints.
// Linear (ridge-fit) leaves multiply the leaf indicator with an affine
// response through a four-inequality product window.
//
// All variable names are derived from a caller-supplied prefix through
// MipModel::fresh_name, so repeated encodings in one model cannot collide.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "comicl/common.hpp"
#include "comicl/conformal.hpp"
#include "comicl/mip.hpp"
#include "comicl/mlp.hpp"
#include "comicl/oracle.hpp"
#include "comicl/tree.hpp"

namespace comicl {

// Default network big-M scale: four times the largest calibration-logit
// magnitude.
inline double default_big_m(double max_abs_logit) {
  require(max_abs_logit >= 0.0, "default_big_m: magnitude must be non-negative");
  return 4.0 * max_abs_logit;
}

// ---------------------------------------------------------------------------
// Interval bound propagation

// Pre-activation interval per layer (last entry = network outputs).  Sound
// for any input in `input_bounds`: each unit's range is bounded individually
// with the worst-case corner of the incoming box.
inline std::vector<std::vector<Interval>> propagate_bounds(
    const Mlp& net, std::span<const Interval> input_bounds) {
  require(input_bounds.size() == net.n_inputs(),
          "propagate_bounds: bound count does not match network inputs");
  for (const Interval& b : input_bounds) {
    require(b.is_finite() && b.lo <= b.hi,
            "propagate_bounds: inputs must have finite ordered bounds");
  }
  std::vector<std::vector<Interval>> pre(net.layers.size());
  std::vector<Interval> cur(input_bounds.begin(), input_bounds.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& L = net.layers[l];
    pre[l].resize(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      double lo = L.b[o], hi = L.b[o];
      const double* wr = &L.w[o * L.in];
      for (std::size_t i = 0; i < L.in; ++i) {
        if (wr[i] >= 0.0) {
          lo += wr[i] * cur[i].lo;
          hi += wr[i] * cur[i].hi;
        } else {
          lo += wr[i] * cur[i].hi;
          hi += wr[i] * cur[i].lo;
        }
      }
      pre[l][o] = Interval{lo, hi};
    }
    if (l + 1 < net.layers.size()) {
      cur.resize(L.out);
      for (std::size_t o = 0; o < L.out; ++o) {
        cur[o] = Interval{std::max(0.0, pre[l][o].lo), std::max(0.0, pre[l][o].hi)};
      }
    }
  }
  return pre;
}

// ---------------------------------------------------------------------------
// Encoded predictor block

struct EncodedPredictor {
  std::vector<LinExpr> outputs;        // affine in model variables
  std::vector<Interval> output_bounds; // sound over the input box
  std::size_t n_binaries = 0;
  std::size_t n_aux_continuous = 0;
  std::size_t n_rows = 0;
  std::size_t n_stable_off = 0;  // ReLU units fixed at zero
  std::size_t n_stable_on = 0;   // ReLU units passed through affinely
};

namespace detail {

inline std::vector<Interval> bounds_of(const MipModel& model,
                                       std::span<const VarRef> vars,
                                       const char* who) {
  std::vector<Interval> box;
  box.reserve(vars.size());
  for (VarRef v : vars) {
    const Variable& info = model.var(v);
    if (!std::isfinite(info.lb) || !std::isfinite(info.ub)) {
      fail("%s: variable '%s' needs finite bounds", who, info.name.c_str());
    }
    box.push_back(Interval{info.lb, info.ub});
  }
  return box;
}

// Big-M ReLU gadget: returns an expression for max(pre, 0) given sound
// pre-activation bounds, adding variables/rows only when the sign is
// ambiguous.
inline LinExpr encode_relu(MipModel& model, const LinExpr& pre, Interval bound,
                           const std::string& prefix, EncodedPredictor* acc) {
  if (bound.hi <= 0.0) {
    ++acc->n_stable_off;
    return LinExpr(0.0);
  }
  if (bound.lo >= 0.0) {
    ++acc->n_stable_on;
    return pre;
  }
  const VarRef a = model.add_var(model.fresh_name(prefix + "_a"),
                                 VarKind::Continuous, 0.0, bound.hi);
  const VarRef d = model.add_var(model.fresh_name(prefix + "_d"),
                                 VarKind::Binary, 0.0, 1.0);
  // a >= pre
  model.add_constraint(pre - LinExpr(a), Sense::Le, 0.0);
  // a <= pre - lo * (1 - d)
  LinExpr upper = LinExpr(a) - pre;
  upper.add_term(-bound.lo, d);
  model.add_constraint(std::move(upper), Sense::Le, -bound.lo);
  // a <= hi * d
  LinExpr cap = LinExpr(a);
  cap.add_term(-bound.hi, d);
  model.add_constraint(std::move(cap), Sense::Le, 0.0);
  ++acc->n_binaries;
  ++acc->n_aux_continuous;
  acc->n_rows += 3;
  return LinExpr(a);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ReLU network encoding

inline EncodedPredictor encode_mlp(MipModel& model, const Mlp& net,
                                   std::span<const VarRef> inputs,
                                   const std::string& prefix) {
  require(inputs.size() == net.n_inputs(),
          "encode_mlp: input variable count does not match the network");
  const std::vector<Interval> box = detail::bounds_of(model, inputs, "encode_mlp");
  const std::vector<std::vector<Interval>> pre_bounds = propagate_bounds(net, box);

  EncodedPredictor enc;
  std::vector<LinExpr> act;
  act.reserve(inputs.size());
  for (VarRef v : inputs) act.emplace_back(v);

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& L = net.layers[l];
    const bool last = (l + 1 == net.layers.size());
    std::vector<LinExpr> next(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      LinExpr pre(L.b[o]);
      const double* wr = &L.w[o * L.in];
      for (std::size_t i = 0; i < L.in; ++i) {
        if (wr[i] == 0.0) continue;
        LinExpr scaled = act[i];
        scaled *= wr[i];
        pre += scaled;
      }
      if (last) {
        next[o] = std::move(pre);
      } else {
        next[o] = detail::encode_relu(model, pre, pre_bounds[l][o],
                                      prefix + "_l" + std::to_string(l), &enc);
      }
    }
    act = std::move(next);
  }
  enc.outputs = std::move(act);
  enc.output_bounds = pre_bounds.back();
  return enc;
}

// Uncertainty head u(x) = max(net(x), floor), encoded as one clamp stage on
// top of the network block.
inline EncodedPredictor encode_uncertainty(MipModel& model,
                                           const UncertaintyModel& u,
                                           std::span<const VarRef> inputs,
                                           const std::string& prefix) {
  EncodedPredictor enc = encode_mlp(model, u.net, inputs, prefix + "_net");
  require(enc.outputs.size() == 1, "encode_uncertainty: network must be scalar");
  const Interval raw = enc.output_bounds[0];
  // u = floor + max(raw - floor, 0)
  LinExpr shifted = enc.outputs[0];
  shifted += LinExpr(-u.floor);
  LinExpr clamp = detail::encode_relu(model, shifted,
                                      Interval{raw.lo - u.floor, raw.hi - u.floor},
                                      prefix + "_clamp", &enc);
  clamp += LinExpr(u.floor);
  enc.outputs[0] = std::move(clamp);
  enc.output_bounds[0] = Interval{std::max(raw.lo, u.floor), std::max(raw.hi, u.floor)};
  return enc;
}

// ---------------------------------------------------------------------------
// Tree-ensemble encoding

inline EncodedPredictor encode_tree_ensemble(MipModel& model, const Ensemble& ens,
                                             std::span<const VarRef> inputs,
                                             const std::string& prefix) {
  require(inputs.size() == ens.n_features,
          "encode_tree_ensemble: input variable count does not match the ensemble");
  require(!ens.trees.empty(), "encode_tree_ensemble: empty ensemble");
  const std::vector<Interval> box =
      detail::bounds_of(model, inputs, "encode_tree_ensemble");
  EncodedPredictor enc;

  // Distinct split thresholds per feature, ascending, shared by all trees.
  std::map<std::pair<std::size_t, double>, VarRef> split_var;
  std::map<std::size_t, std::vector<double>> per_feature;
  for (const Tree& t : ens.trees) {
    for (const TreeNode& n : t.nodes) {
      if (n.leaf) continue;
      per_feature[static_cast<std::size_t>(n.feature)].push_back(n.threshold);
    }
  }
  for (auto& [f, thresholds] : per_feature) {
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    const double big_m = box[f].width() + kSplitEps;
    VarRef prev{};
    for (std::size_t j = 0; j < thresholds.size(); ++j) {
      const double v = thresholds[j];
      const VarRef w = model.add_var(
          model.fresh_name(prefix + "_w" + std::to_string(f) + "_"),
          VarKind::Binary, 0.0, 1.0);
      split_var.emplace(std::make_pair(f, v), w);
      ++enc.n_binaries;
      // w = 1 side: x_f <= v;  w = 0 side: x_f >= v + eps.
      LinExpr le(inputs[f]);
      le.add_term(big_m, w);
      model.add_constraint(std::move(le), Sense::Le, v + big_m);
      LinExpr ge(inputs[f]);
      ge.add_term(big_m, w);
      model.add_constraint(std::move(ge), Sense::Ge, v + kSplitEps);
      enc.n_rows += 2;
      if (j > 0) {
        // x <= v_{j-1} implies x <= v_j.
        model.add_constraint(LinExpr(prev) - LinExpr(w), Sense::Le, 0.0);
        ++enc.n_rows;
      }
      prev = w;
    }
  }

  // Per tree: leaf indicators, path constraints, and the response.
  std::vector<LinExpr> tree_outputs;
  std::vector<Interval> tree_ranges;
  for (std::size_t ti = 0; ti < ens.trees.size(); ++ti) {
    const Tree& t = ens.trees[ti];
    const std::string tp = prefix + "_t" + std::to_string(ti);

    // Leaves under each node, found by walking once (children follow their
    // parent in index order, so a reverse pass collects bottom-up).
    std::vector<std::vector<std::size_t>> leaves_under(t.nodes.size());
    for (std::size_t idx = t.nodes.size(); idx-- > 0;) {
      const TreeNode& n = t.nodes[idx];
      if (n.leaf) {
        leaves_under[idx].push_back(idx);
      } else {
        const auto& l = leaves_under[static_cast<std::size_t>(n.left)];
        const auto& r = leaves_under[static_cast<std::size_t>(n.right)];
        leaves_under[idx].insert(leaves_under[idx].end(), l.begin(), l.end());
        leaves_under[idx].insert(leaves_under[idx].end(), r.begin(), r.end());
      }
    }

    std::map<std::size_t, VarRef> leaf_var;
    LinExpr one_leaf;
    for (std::size_t idx : leaves_under[0]) {
      const VarRef r = model.add_var(model.fresh_name(tp + "_r"), VarKind::Binary,
                                     0.0, 1.0);
      leaf_var[idx] = r;
      one_leaf += LinExpr(r);
      ++enc.n_binaries;
    }
    model.add_constraint(std::move(one_leaf), Sense::Eq, 1.0);
    ++enc.n_rows;

    for (std::size_t idx = 0; idx < t.nodes.size(); ++idx) {
      const TreeNode& n = t.nodes[idx];
      if (n.leaf) continue;
      const VarRef w = split_var.at(
          {static_cast<std::size_t>(n.feature), n.threshold});
      LinExpr left_sum, right_sum;
      for (std::size_t leaf : leaves_under[static_cast<std::size_t>(n.left)]) {
        left_sum += LinExpr(leaf_var.at(leaf));
      }
      for (std::size_t leaf : leaves_under[static_cast<std::size_t>(n.right)]) {
        right_sum += LinExpr(leaf_var.at(leaf));
      }
      // Reaching a left/right leaf requires the split to point that way.
      left_sum.add_term(-1.0, w);
      model.add_constraint(std::move(left_sum), Sense::Le, 0.0);
      right_sum.add_term(1.0, w);
      model.add_constraint(std::move(right_sum), Sense::Le, 1.0);
      enc.n_rows += 2;
    }

    LinExpr out;
    double range_lo = kInf, range_hi = -kInf;
    for (std::size_t idx : leaves_under[0]) {
      const TreeNode& n = t.nodes[idx];
      const VarRef r = leaf_var.at(idx);
      if (n.coef.empty()) {
        out.add_term(n.value, r);
        range_lo = std::min(range_lo, n.value);
        range_hi = std::max(range_hi, n.value);
      } else {
        // Linear leaf: p = r * g(x) through a product window, where
        // [glo, ghi] bounds g over the input box.
        require(n.coef.size() == inputs.size(),
                "encode_tree_ensemble: linear leaf dimension mismatch");
        LinExpr g(n.intercept);
        double glo = n.intercept, ghi = n.intercept;
        for (std::size_t f = 0; f < inputs.size(); ++f) {
          if (n.coef[f] == 0.0) continue;
          g.add_term(n.coef[f], inputs[f]);
          if (n.coef[f] >= 0.0) {
            glo += n.coef[f] * box[f].lo;
            ghi += n.coef[f] * box[f].hi;
          } else {
            glo += n.coef[f] * box[f].hi;
            ghi += n.coef[f] * box[f].lo;
          }
        }
        const VarRef p = model.add_var(model.fresh_name(tp + "_p"),
                                       VarKind::Continuous, std::min(0.0, glo),
                                       std::max(0.0, ghi));
        ++enc.n_aux_continuous;
        // r = 1 forces p = g; r = 0 forces p = 0.
        LinExpr c1(p);
        c1.add_term(-ghi, r);
        model.add_constraint(std::move(c1), Sense::Le, 0.0);  // p <= ghi r
        LinExpr c2(p);
        c2.add_term(-glo, r);
        model.add_constraint(std::move(c2), Sense::Ge, 0.0);  // p >= glo r
        LinExpr c3 = LinExpr(p) - g;
        c3.add_term(-glo, r);
        model.add_constraint(std::move(c3), Sense::Le, -glo);  // p <= g - glo(1-r)
        LinExpr c4 = LinExpr(p) - g;
        c4.add_term(-ghi, r);
        model.add_constraint(std::move(c4), Sense::Ge, -ghi);  // p >= g - ghi(1-r)
        enc.n_rows += 4;
        out += LinExpr(p);
        range_lo = std::min(range_lo, glo);
        range_hi = std::max(range_hi, ghi);
      }
    }
    tree_outputs.push_back(std::move(out));
    tree_ranges.push_back(Interval{range_lo, range_hi});
  }

  LinExpr combined;
  Interval bound{0.0, 0.0};
  switch (ens.combine) {
    case Combine::Single:
      combined = std::move(tree_outputs.front());
      bound = tree_ranges.front();
      break;
    case Combine::Average: {
      const double inv = 1.0 / static_cast<double>(tree_outputs.size());
      for (std::size_t i = 0; i < tree_outputs.size(); ++i) {
        tree_outputs[i] *= inv;
        combined += tree_outputs[i];
        bound.lo += inv * tree_ranges[i].lo;
        bound.hi += inv * tree_ranges[i].hi;
      }
      break;
    }
    case Combine::Boosted: {
      require(ens.lr > 0.0, "encode_tree_ensemble: stage weight must be positive");
      combined = LinExpr(ens.base);
      bound = Interval{ens.base, ens.base};
      for (std::size_t i = 0; i < tree_outputs.size(); ++i) {
        tree_outputs[i] *= ens.lr;
        combined += tree_outputs[i];
        bound.lo += ens.lr * tree_ranges[i].lo;
        bound.hi += ens.lr * tree_ranges[i].hi;
      }
      break;
    }
  }
  enc.outputs.push_back(std::move(combined));
  enc.output_bounds.push_back(bound);
  return enc;
}

// ---------------------------------------------------------------------------
// Outcome-set reformulations

struct ConformalBlock {
  double q_hat = 0.0;          // regression: the single applied quantile
  std::vector<double> q_class; // classification: quantile per class
  double required_big_m = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_binaries = 0;
  std::vector<VarRef> set_members;  // classification: w_k per class
};

// Regression: prediction plus/minus the scaled uncertainty must stay inside
// the target range.  Exactly two rows.  Group-conditional calibrations apply
// the out-of-range group's quantile (group 0), the binding one for
// guaranteeing containment.
inline ConformalBlock add_regression_conformal(MipModel& model,
                                               const LinExpr& prediction,
                                               const LinExpr& uncertainty,
                                               const Calibration& calib,
                                               Interval range,
                                               const std::string& prefix) {
  require(calib.kind == ScoreKind::NormalizedResidual,
          "add_regression_conformal: calibration was built for another score");
  require(range.is_finite() && range.lo <= range.hi,
          "add_regression_conformal: target range must be finite");
  const double q = calib.mondrian ? calib.quantile_for(0) : calib.q_hat;
  if (!std::isfinite(q)) {
    throw CalibrationInfeasibleError(
        "calibration-infeasible: conformal quantile is infinite "
        "(calibration set too small for the requested alpha)");
  }
  require(q >= 0.0, "add_regression_conformal: negative quantile");

  LinExpr upper = prediction;
  LinExpr scaled_up = uncertainty;
  scaled_up *= q;
  upper += scaled_up;
  model.add_constraint(std::move(upper), Sense::Le, range.hi, prefix + "_upper");

  LinExpr lower = prediction;
  LinExpr scaled_dn = uncertainty;
  scaled_dn *= q;
  lower -= scaled_dn;
  model.add_constraint(std::move(lower), Sense::Ge, range.lo, prefix + "_lower");

  ConformalBlock blk;
  blk.q_hat = q;
  blk.n_rows = 2;
  return blk;
}

// Smallest big-M that keeps every class-membership indicator row redundant
// when its binary releases it, over the sound logit box.
inline double classification_big_m_requirement(
    std::span<const Interval> logit_bounds, std::span<const double> q_class) {
  require(logit_bounds.size() == q_class.size(),
          "classification_big_m_requirement: size mismatch");
  double need = 0.0;
  for (std::size_t k = 0; k < q_class.size(); ++k) {
    require(std::isfinite(q_class[k]),
            "classification_big_m_requirement: quantile must be finite");
    need = std::max(need, std::max(-logit_bounds[k].lo - q_class[k],
                                   logit_bounds[k].hi + q_class[k] +
                                       kClassMarginEps));
  }
  return std::max(need, 0.0);
}

// Classification: w_k indicates membership of class k in the conformal set
// {k : -logit_k <= q_k}.  Undesired classes are pinned out of the set, and
// at least one desired class must be in it.  Per class k:
//   -logit_k - q_k <= M (1 - w_k)        (w_k = 1 -> k inside the set)
//    logit_k + q_k + eps <= M w_k        (w_k = 0 -> k strictly outside)
// M must dominate both rows' slack over the sound logit box; anything
// smaller is rejected because it would silently cut feasible inputs.
inline ConformalBlock add_classification_conformal(
    MipModel& model, std::span<const LinExpr> logits,
    std::span<const Interval> logit_bounds, const Calibration& calib,
    const OutcomeSet& outcome, double big_m, const std::string& prefix) {
  require(calib.kind == ScoreKind::NegativeTrueLogit,
          "add_classification_conformal: calibration was built for another score");
  const std::size_t k_classes = logits.size();
  require(k_classes >= 2, "add_classification_conformal: need at least two classes");
  require(logit_bounds.size() == k_classes,
          "add_classification_conformal: bound count mismatch");
  require(outcome.task == TaskKind::Classification,
          "add_classification_conformal: outcome set is not class-based");
  require(!outcome.desired.empty(),
          "add_classification_conformal: no desired classes");

  ConformalBlock blk;
  blk.q_class.resize(k_classes);
  for (std::size_t k = 0; k < k_classes; ++k) {
    const int group = outcome.contains_class(static_cast<int>(k)) ? 1 : 0;
    const double q = calib.mondrian ? calib.quantile_for(group) : calib.q_hat;
    if (!std::isfinite(q)) {
      throw CalibrationInfeasibleError(
          "calibration-infeasible: conformal quantile is infinite "
          "(calibration set too small for the requested alpha)");
    }
    blk.q_class[k] = q;
  }
  blk.required_big_m = classification_big_m_requirement(logit_bounds, blk.q_class);
  if (big_m < blk.required_big_m - 1e-12) {
    fail("add_classification_conformal: big-M %g is below the propagated "
         "requirement %g",
         big_m, blk.required_big_m);
  }

  LinExpr desired_sum;
  for (std::size_t k = 0; k < k_classes; ++k) {
    const bool desired = outcome.contains_class(static_cast<int>(k));
    const VarRef w = model.add_var(
        model.fresh_name(prefix + "_w"), VarKind::Binary, 0.0,
        desired ? 1.0 : 0.0);  // undesired classes can never join the set
    blk.set_members.push_back(w);
    ++blk.n_binaries;
    const double q = blk.q_class[k];

    // -logit_k - M(1 - w_k) <= q_k
    LinExpr inside = LinExpr(0.0) - logits[k];
    inside.add_term(big_m, w);
    model.add_constraint(std::move(inside), Sense::Le, q + big_m,
                         prefix + "_in" + std::to_string(k));
    // logit_k + q_k + eps <= M w_k
    LinExpr outside = logits[k];
    outside.add_term(-big_m, w);
    model.add_constraint(std::move(outside), Sense::Le, -q - kClassMarginEps,
                         prefix + "_out" + std::to_string(k));
    blk.n_rows += 2;
    if (desired) desired_sum += LinExpr(w);
  }
  model.add_constraint(std::move(desired_sum), Sense::Ge, 1.0,
                       prefix + "_nonempty");
  ++blk.n_rows;
  return blk;
}

// Point-prediction selection: at least one desired class must strictly
// dominate every undesired class, so the predicted label is desired.  One
// binary per desired class; big-M per pair from the sound logit box.
struct ArgmaxBlock {
  std::size_t n_rows = 0;
  std::size_t n_binaries = 0;
  std::vector<VarRef> selectors;  // one per desired class, in order
};

// With a `gate` binary the whole block is optional: gate = 1 demands a
// desired winner, gate = 0 leaves the logits unconstrained.
inline ArgmaxBlock add_argmax_selection(MipModel& model,
                                        std::span<const LinExpr> logits,
                                        std::span<const Interval> logit_bounds,
                                        const OutcomeSet& outcome,
                                        const std::string& prefix,
                                        const VarRef* gate = nullptr) {
  require(outcome.task == TaskKind::Classification,
          "add_argmax_selection: outcome set is not class-based");
  require(logit_bounds.size() == logits.size(),
          "add_argmax_selection: bound count mismatch");
  const std::vector<int> undesired = outcome.undesired();
  require(!outcome.desired.empty(), "add_argmax_selection: no desired classes");

  ArgmaxBlock blk;
  LinExpr chosen;
  for (int k : outcome.desired) {
    require(k >= 0 && static_cast<std::size_t>(k) < logits.size(),
            "add_argmax_selection: desired class out of range");
    const VarRef w = model.add_var(model.fresh_name(prefix + "_sel"),
                                   VarKind::Binary, 0.0, 1.0);
    blk.selectors.push_back(w);
    ++blk.n_binaries;
    chosen += LinExpr(w);
    for (int u : undesired) {
      // w_k = 1 -> logit_u + eps <= logit_k.
      const double m = logit_bounds[static_cast<std::size_t>(u)].hi -
                       logit_bounds[static_cast<std::size_t>(k)].lo +
                       kClassMarginEps;
      LinExpr row = logits[static_cast<std::size_t>(u)];
      row -= logits[static_cast<std::size_t>(k)];
      row.add_term(m, w);
      model.add_constraint(std::move(row), Sense::Le, m - kClassMarginEps,
                           prefix + "_dom" + std::to_string(k) + "_" +
                               std::to_string(u));
      ++blk.n_rows;
    }
  }
  if (gate != nullptr) chosen.add_term(-1.0, *gate);
  model.add_constraint(std::move(chosen), Sense::Ge, gate != nullptr ? 0.0 : 1.0,
                       prefix + "_pick");
  ++blk.n_rows;
  return blk;
}

// Big-M relaxable interval membership: when `active` is 1 the expression
// must lie in `range`; when 0 the rows are vacuous over the sound bounds.
// Used for ensemble-member voting.
inline std::size_t add_soft_interval_membership(MipModel& model,
                                                const LinExpr& expr,
                                                Interval expr_bounds,
                                                Interval range, VarRef active,
                                                const std::string& prefix) {
  require(range.is_finite(), "add_soft_interval_membership: range must be finite");
  std::size_t rows = 0;
  if (expr_bounds.hi > range.hi) {
    const double m = expr_bounds.hi - range.hi;
    LinExpr up = expr;
    up.add_term(m, active);
    model.add_constraint(std::move(up), Sense::Le, range.hi + m, prefix + "_hi");
    ++rows;
  }
  if (expr_bounds.lo < range.lo) {
    const double m = range.lo - expr_bounds.lo;
    LinExpr dn = expr;
    dn.add_term(-m, active);
    model.add_constraint(std::move(dn), Sense::Ge, range.lo - m, prefix + "_lo");
    ++rows;
  }
  return rows;
}

}  // namespace comicl
