#pragma once

// Split conformal calibration.
//
// Scores are nonconformity values (larger = worse fit).  The calibrated
// quantile is the k-th smallest calibration score with
//     k = ceil((1 - alpha) * (n + 1)),
// which yields the finite-sample marginal guarantee
//     P(score(X, Y) <= q_hat) >= 1 - alpha
// for an exchangeable test point.  When k exceeds n the quantile is the
// +inf sentinel: every set becomes the whole outcome space and no bounded
// constraint reformulation exists (reported as calibration-infeasible at
// encoding time).
//
// The Mondrian variant computes one quantile per group label using the same
// rule within each group, giving the same guarantee conditionally per group.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "comicl/common.hpp"

namespace comicl {

enum class ScoreKind { NormalizedResidual, NegativeTrueLogit };

inline const char* score_kind_text(ScoreKind k) {
  return k == ScoreKind::NormalizedResidual ? "normalized-residual"
                                            : "negative-true-logit";
}

inline ScoreKind score_kind_from_text(const std::string& s) {
  if (s == "normalized-residual") return ScoreKind::NormalizedResidual;
  if (s == "negative-true-logit") return ScoreKind::NegativeTrueLogit;
  throw Error("unknown score kind '" + s + "'");
}

// Uncertainty-normalized absolute residual.  The uncertainty must respect
// the global floor; anything smaller indicates a broken uncertainty model.
inline double score_regression(double prediction, double uncertainty, double y) {
  if (!(uncertainty >= kUncertaintyFloor)) {
    fail("score_regression: uncertainty %g below the floor %g", uncertainty,
         kUncertaintyFloor);
  }
  return std::fabs(prediction - y) / uncertainty;
}

// Negative logit of the true class (smaller logit = less conforming).
inline double score_classification(std::span<const double> logits, int true_class) {
  require(true_class >= 0 && static_cast<std::size_t>(true_class) < logits.size(),
          "score_classification: class index out of range");
  return -logits[static_cast<std::size_t>(true_class)];
}

// k-th smallest score with k = ceil((1-alpha)(n+1)); +inf sentinel when
// k > n.  The product is nudged by -1e-9 before ceil() so that values that
// are mathematically integral but land just above an integer in floating
// point (e.g. 0.9 * 20 = 18.000000000000004) do not get rounded up a rank.
inline double conformal_quantile(std::span<const double> scores, double alpha) {
  require(!scores.empty(), "conformal_quantile: empty calibration scores");
  require(alpha > 0.0 && alpha < 1.0, "conformal_quantile: alpha must be in (0,1)");
  for (double s : scores) {
    require(std::isfinite(s), "conformal_quantile: non-finite score");
  }
  const auto n = static_cast<double>(scores.size());
  const auto k = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * (n + 1.0) - 1e-9));
  if (k > scores.size()) return kInf;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[k - 1];
}

struct GroupQuantile {
  int group = 0;
  double q_hat = 0.0;
  std::size_t n = 0;
};

struct Calibration {
  double alpha = 0.1;
  ScoreKind kind = ScoreKind::NormalizedResidual;
  std::size_t n_total = 0;
  double q_hat = kInf;                 // marginal quantile
  bool mondrian = false;
  std::vector<GroupQuantile> groups;   // per-group quantiles (Mondrian only)

  // Quantile to use for a point in `group`: the marginal quantile unless
  // this calibration is Mondrian, in which case the group must have been
  // present during calibration.
  double quantile_for(int group) const {
    if (!mondrian) return q_hat;
    for (const GroupQuantile& g : groups) {
      if (g.group == group) return g.q_hat;
    }
    throw Error("calibration has no quantile for group " + std::to_string(group));
  }
};

inline Calibration calibrate(std::span<const double> scores, double alpha,
                             ScoreKind kind) {
  Calibration c;
  c.alpha = alpha;
  c.kind = kind;
  c.n_total = scores.size();
  c.q_hat = conformal_quantile(scores, alpha);
  return c;
}

// Mondrian calibration: one quantile per distinct group label, groups
// reported in ascending label order.
inline Calibration calibrate_mondrian(std::span<const double> scores,
                                      std::span<const int> groups, double alpha,
                                      ScoreKind kind) {
  require(scores.size() == groups.size(),
          "calibrate_mondrian: scores/groups length mismatch");
  Calibration c;
  c.alpha = alpha;
  c.kind = kind;
  c.n_total = scores.size();
  c.q_hat = conformal_quantile(scores, alpha);  // marginal, kept for reference
  c.mondrian = true;
  std::vector<int> labels(groups.begin(), groups.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (int g : labels) {
    std::vector<double> sub;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (groups[i] == g) sub.push_back(scores[i]);
    }
    c.groups.push_back(GroupQuantile{g, conformal_quantile(sub, alpha), sub.size()});
  }
  return c;
}

struct StratumCoverage {
  int group = 0;
  std::size_t n = 0;
  double coverage = 0.0;
};

struct CoverageReport {
  double overall = 0.0;
  std::size_t n = 0;
  std::vector<StratumCoverage> strata;
};

// Fraction of evaluation scores covered (score <= applicable quantile).
// For Mondrian calibrations, `groups` is required and every evaluation group
// must have been seen during calibration; per-stratum coverage is reported
// for whichever grouping is passed (optional for marginal calibrations).
inline CoverageReport coverage_eval(const Calibration& calib,
                                    std::span<const double> scores,
                                    std::span<const int> groups = {}) {
  require(!scores.empty(), "coverage_eval: no evaluation scores");
  if (calib.mondrian) {
    require(groups.size() == scores.size(),
            "coverage_eval: Mondrian calibration needs a group per score");
  }
  if (!groups.empty()) {
    require(groups.size() == scores.size(),
            "coverage_eval: scores/groups length mismatch");
  }
  CoverageReport rep;
  rep.n = scores.size();
  std::size_t hit = 0;
  std::vector<int> labels;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double q = groups.empty() ? calib.q_hat : calib.quantile_for(groups[i]);
    if (scores[i] <= q) ++hit;
  }
  rep.overall = static_cast<double>(hit) / static_cast<double>(scores.size());
  if (!groups.empty()) {
    labels.assign(groups.begin(), groups.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (int g : labels) {
      std::size_t n_g = 0, hit_g = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (groups[i] != g) continue;
        ++n_g;
        if (scores[i] <= calib.quantile_for(g)) ++hit_g;
      }
      rep.strata.push_back(StratumCoverage{
          g, n_g, static_cast<double>(hit_g) / static_cast<double>(n_g)});
    }
  }
  return rep;
}

}  // namespace comicl
