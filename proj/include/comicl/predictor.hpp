#pragma once

// A trained predictor is either a ReLU network or a tree ensemble.  Network
// predictors may have one output (regression value) or several
// (classification logits); tree ensembles are regression-only.

#include <span>
#include <variant>
#include <vector>

#include "comicl/mlp.hpp"
#include "comicl/tree.hpp"

namespace comicl {

using Predictor = std::variant<Mlp, Ensemble>;

inline std::size_t predictor_inputs(const Predictor& p) {
  if (const auto* m = std::get_if<Mlp>(&p)) return m->n_inputs();
  return std::get<Ensemble>(p).n_features;
}

inline bool predictor_is_mlp(const Predictor& p) {
  return std::holds_alternative<Mlp>(p);
}

// Scalar regression prediction.
inline double predictor_value(const Predictor& p, std::span<const double> x) {
  if (const auto* m = std::get_if<Mlp>(&p)) return predict_scalar(*m, x);
  return predict_ensemble(std::get<Ensemble>(p), x);
}

// Classification logits (networks only).
inline std::vector<double> predictor_logits(const Predictor& p,
                                            std::span<const double> x) {
  const auto* m = std::get_if<Mlp>(&p);
  require(m != nullptr, "predictor_logits: classification requires a network predictor");
  require(m->n_outputs() >= 2, "predictor_logits: network has fewer than 2 outputs");
  return predict_mlp(*m, x);
}

}  // namespace comicl
