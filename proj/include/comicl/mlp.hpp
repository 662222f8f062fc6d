#pragma once

// Fully connected ReLU networks and their trainer.
//
// Training is plain full-batch gradient descent with a fixed learning rate
// and L2 weight decay (weights only, not biases).  Inputs and regression
// targets are standardized internally over the training rows; the affine
// transforms are folded back into the first and last layers on return, so
// the produced network operates on raw units.  With epochs == 0 the seeded
// initialization is returned verbatim.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "comicl/common.hpp"
#include "comicl/data.hpp"
#include "comicl/rng.hpp"

namespace comicl {

struct Layer {
  std::size_t in = 0, out = 0;
  std::vector<double> w;  // row-major: w[o * in + i]
  std::vector<double> b;  // length out
};

struct Mlp {
  std::vector<Layer> layers;  // ReLU after every layer except the last

  std::size_t n_inputs() const {
    require(!layers.empty(), "Mlp has no layers");
    return layers.front().in;
  }
  std::size_t n_outputs() const {
    require(!layers.empty(), "Mlp has no layers");
    return layers.back().out;
  }
};

inline std::vector<double> predict_mlp(const Mlp& m, std::span<const double> x) {
  require(x.size() == m.n_inputs(), "predict_mlp: input dimension mismatch");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const Layer& L = m.layers[l];
    next.assign(L.out, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      double s = L.b[o];
      const double* wr = &L.w[o * L.in];
      for (std::size_t i = 0; i < L.in; ++i) s += wr[i] * cur[i];
      next[o] = (l + 1 < m.layers.size() && s < 0.0) ? 0.0 : s;
    }
    cur.swap(next);
  }
  return cur;
}

inline double predict_scalar(const Mlp& m, std::span<const double> x) {
  require(m.n_outputs() == 1, "predict_scalar: network is not single-output");
  return predict_mlp(m, x)[0];
}

inline int predict_class(const Mlp& m, std::span<const double> x) {
  const std::vector<double> logits = predict_mlp(m, x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[best]) best = k;
  }
  return static_cast<int>(best);
}

struct MlpTrainConfig {
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t epochs = 2000;
  double learning_rate = 0.05;
  double l2 = 0.01;
  std::uint64_t seed = 0;
};

struct TrainStats {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t epochs_run = 0;
};

namespace detail {

// Glorot-uniform init: w ~ U(-r, r) with r = sqrt(6 / (in + out)), biases
// zero.  Weights are drawn in storage order, layer by layer, from a single
// generator, so the result is pinned by the seed alone.
inline Mlp init_mlp(std::size_t n_in, const std::vector<std::size_t>& hidden,
                    std::size_t n_out, std::uint64_t seed) {
  require(n_in > 0 && n_out > 0, "init_mlp: degenerate layer width");
  for (std::size_t h : hidden) require(h > 0, "init_mlp: zero-width hidden layer");
  std::vector<std::size_t> widths;
  widths.push_back(n_in);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(n_out);
  Mlp m;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Layer L;
    L.in = widths[l];
    L.out = widths[l + 1];
    const double r = std::sqrt(6.0 / static_cast<double>(L.in + L.out));
    L.w.resize(L.in * L.out);
    for (auto& w : L.w) w = rng.uniform(-r, r);
    L.b.assign(L.out, 0.0);
    m.layers.push_back(std::move(L));
  }
  return m;
}

struct Standardizer {
  std::vector<double> mean, sd;

  static Standardizer fit(const Dataset& data, std::span<const std::size_t> rows) {
    Standardizer s;
    const std::size_t d = data.n_features;
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 0.0);
    for (std::size_t r : rows) {
      std::span<const double> x = data.row(r);
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += x[j];
    }
    for (std::size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(rows.size());
    for (std::size_t r : rows) {
      std::span<const double> x = data.row(r);
      for (std::size_t j = 0; j < d; ++j) {
        s.sd[j] += (x[j] - s.mean[j]) * (x[j] - s.mean[j]);
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      s.sd[j] = std::sqrt(s.sd[j] / static_cast<double>(rows.size()));
      if (s.sd[j] < 1e-12) s.sd[j] = 1.0;  // constant feature: leave as-is
    }
    return s;
  }
};

// Core trainer.  `targets` holds one value per entry of `rows`: raw target
// values for regression (standardized internally) or class indices for
// classification (softmax cross-entropy on n_out logits).
inline Mlp train_mlp_core(const Dataset& data, std::span<const std::size_t> rows,
                          std::span<const double> targets, TaskKind task,
                          std::size_t n_out, const MlpTrainConfig& cfg,
                          TrainStats* stats) {
  require(!rows.empty(), "train_mlp: no training rows");
  require(targets.size() == rows.size(), "train_mlp: target count mismatch");
  require(cfg.learning_rate > 0.0, "train_mlp: learning rate must be positive");
  require(cfg.l2 >= 0.0, "train_mlp: l2 must be non-negative");

  const std::size_t d = data.n_features;
  Mlp net = init_mlp(d, cfg.hidden, n_out, cfg.seed);
  if (cfg.epochs == 0) {
    if (stats) *stats = TrainStats{};
    return net;  // seeded initialization, untouched
  }

  const std::size_t n = rows.size();
  const Standardizer xs = Standardizer::fit(data, rows);

  // Standardized input matrix.
  std::vector<double> X(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> raw = data.row(rows[i]);
    for (std::size_t j = 0; j < d; ++j) {
      X[i * d + j] = (raw[j] - xs.mean[j]) / xs.sd[j];
    }
  }

  // Target standardization (regression only).
  double ty_mean = 0.0, ty_sd = 1.0;
  std::vector<double> y(targets.begin(), targets.end());
  if (task == TaskKind::Regression) {
    require(n_out == 1, "train_mlp: regression nets have one output");
    for (double v : y) ty_mean += v;
    ty_mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : y) ss += (v - ty_mean) * (v - ty_mean);
    ty_sd = std::sqrt(ss / static_cast<double>(n));
    if (ty_sd < 1e-12) ty_sd = 1.0;
    for (double& v : y) v = (v - ty_mean) / ty_sd;
  } else {
    for (double v : y) {
      require(v == std::floor(v) && v >= 0.0 && v < static_cast<double>(n_out),
              "train_mlp: class index out of range");
    }
  }

  const std::size_t n_layers = net.layers.size();
  // Per-layer activation/delta buffers (batch-major).
  std::vector<std::vector<double>> act(n_layers + 1);  // act[0] = X
  std::vector<std::vector<double>> pre(n_layers);
  std::vector<std::vector<double>> delta(n_layers);
  act[0] = X;
  for (std::size_t l = 0; l < n_layers; ++l) {
    act[l + 1].assign(n * net.layers[l].out, 0.0);
    pre[l].assign(n * net.layers[l].out, 0.0);
    delta[l].assign(n * net.layers[l].out, 0.0);
  }
  std::vector<double> gw, gb;

  auto forward_and_loss = [&]() -> double {
    for (std::size_t l = 0; l < n_layers; ++l) {
      const Layer& L = net.layers[l];
      const bool last = (l + 1 == n_layers);
      const std::vector<double>& a_in = act[l];
      for (std::size_t i = 0; i < n; ++i) {
        const double* xin = &a_in[i * L.in];
        for (std::size_t o = 0; o < L.out; ++o) {
          double s = L.b[o];
          const double* wr = &L.w[o * L.in];
          for (std::size_t j = 0; j < L.in; ++j) s += wr[j] * xin[j];
          pre[l][i * L.out + o] = s;
          act[l + 1][i * L.out + o] = (!last && s < 0.0) ? 0.0 : s;
        }
      }
    }
    // Data loss (mean over samples).
    double loss = 0.0;
    const std::vector<double>& out = act[n_layers];
    if (task == TaskKind::Regression) {
      for (std::size_t i = 0; i < n; ++i) {
        const double e = out[i] - y[i];
        loss += e * e;
      }
      loss /= static_cast<double>(n);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double* lo = &out[i * n_out];
        double mx = lo[0];
        for (std::size_t k = 1; k < n_out; ++k) mx = std::max(mx, lo[k]);
        double z = 0.0;
        for (std::size_t k = 0; k < n_out; ++k) z += std::exp(lo[k] - mx);
        const auto truth = static_cast<std::size_t>(y[i]);
        loss += -(lo[truth] - mx - std::log(z));
      }
      loss /= static_cast<double>(n);
    }
    double wpen = 0.0;
    for (const Layer& L : net.layers) {
      for (double w : L.w) wpen += w * w;
    }
    return loss + cfg.l2 * wpen;
  };

  double initial_loss = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = forward_and_loss();
    if (!std::isfinite(loss)) {
      fail("train_mlp: loss became non-finite at epoch %zu", epoch);
    }
    if (epoch == 0) initial_loss = loss;

    // Output-layer error signal.
    const std::vector<double>& out = act[n_layers];
    std::vector<double>& dl = delta[n_layers - 1];
    if (task == TaskKind::Regression) {
      for (std::size_t i = 0; i < n; ++i) {
        dl[i] = 2.0 * (out[i] - y[i]) / static_cast<double>(n);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double* lo = &out[i * n_out];
        double mx = lo[0];
        for (std::size_t k = 1; k < n_out; ++k) mx = std::max(mx, lo[k]);
        double z = 0.0;
        for (std::size_t k = 0; k < n_out; ++k) z += std::exp(lo[k] - mx);
        const auto truth = static_cast<std::size_t>(y[i]);
        for (std::size_t k = 0; k < n_out; ++k) {
          const double p = std::exp(lo[k] - mx) / z;
          dl[i * n_out + k] =
              (p - (k == truth ? 1.0 : 0.0)) / static_cast<double>(n);
        }
      }
    }

    // Backprop and in-place updates, last layer to first.
    for (std::size_t l = n_layers; l-- > 0;) {
      Layer& L = net.layers[l];
      const std::vector<double>& a_in = act[l];
      const std::vector<double>& dcur = delta[l];
      if (l > 0) {
        std::vector<double>& dprev = delta[l - 1];
        std::fill(dprev.begin(), dprev.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double* dc = &dcur[i * L.out];
          double* dp = &dprev[i * L.in];
          for (std::size_t o = 0; o < L.out; ++o) {
            const double g = dc[o];
            if (g == 0.0) continue;
            const double* wr = &L.w[o * L.in];
            for (std::size_t j = 0; j < L.in; ++j) dp[j] += g * wr[j];
          }
          // ReLU gate for the previous layer.
          const double* pz = &pre[l - 1][i * L.in];
          for (std::size_t j = 0; j < L.in; ++j) {
            if (pz[j] < 0.0) dp[j] = 0.0;
          }
        }
      }
      gw.assign(L.w.size(), 0.0);
      gb.assign(L.b.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* dc = &dcur[i * L.out];
        const double* xin = &a_in[i * L.in];
        for (std::size_t o = 0; o < L.out; ++o) {
          const double g = dc[o];
          if (g == 0.0) continue;
          gb[o] += g;
          double* gwr = &gw[o * L.in];
          for (std::size_t j = 0; j < L.in; ++j) gwr[j] += g * xin[j];
        }
      }
      for (std::size_t k = 0; k < L.w.size(); ++k) {
        L.w[k] -= cfg.learning_rate * (gw[k] + 2.0 * cfg.l2 * L.w[k]);
      }
      for (std::size_t o = 0; o < L.b.size(); ++o) {
        L.b[o] -= cfg.learning_rate * gb[o];
      }
    }
  }
  const double final_loss = forward_and_loss();
  if (!std::isfinite(final_loss)) {
    fail("train_mlp: loss became non-finite at epoch %zu", cfg.epochs);
  }
  if (stats) {
    stats->initial_loss = initial_loss;
    stats->final_loss = final_loss;
    stats->epochs_run = cfg.epochs;
  }

  // Fold the input standardization into the first layer:
  //   net((x - m) / s) == net'(x)  with w' = w / s, b' = b - w' . m
  {
    Layer& L0 = net.layers.front();
    for (std::size_t o = 0; o < L0.out; ++o) {
      double shift = 0.0;
      for (std::size_t j = 0; j < L0.in; ++j) {
        L0.w[o * L0.in + j] /= xs.sd[j];
        shift += L0.w[o * L0.in + j] * xs.mean[j];
      }
      L0.b[o] -= shift;
    }
  }
  // Fold the target standardization into the last layer (regression).
  if (task == TaskKind::Regression) {
    Layer& LL = net.layers.back();
    for (double& w : LL.w) w *= ty_sd;
    for (double& b : LL.b) b = b * ty_sd + ty_mean;
  }
  return net;
}

}  // namespace detail

// Trains an MLP on the given rows: one linear output fit to "y" for
// regression, n_classes softmax logits fit to "label" for classification.
inline Mlp train_mlp(const Dataset& data, std::span<const std::size_t> rows,
                     const MlpTrainConfig& cfg, TrainStats* stats = nullptr) {
  std::vector<double> targets;
  targets.reserve(rows.size());
  for (std::size_t r : rows) {
    require(r < data.n_rows, "train_mlp: row index out of range");
    targets.push_back(data.targets[r]);
  }
  const std::size_t n_out =
      data.task == TaskKind::Regression ? 1 : static_cast<std::size_t>(data.n_classes);
  return detail::train_mlp_core(data, rows, targets, data.task, n_out, cfg, stats);
}

// Heteroscedastic uncertainty: a regression net fit to absolute residuals of
// the base model, clamped from below at `floor` via
//   u(x) = floor + max(0, net(x) - floor)  ==  max(net(x), floor).
struct UncertaintyModel {
  Mlp net;
  double floor = kUncertaintyFloor;
};

inline double predict_uncertainty(const UncertaintyModel& u,
                                  std::span<const double> x) {
  const double raw = predict_scalar(u.net, x);
  return u.floor + std::max(0.0, raw - u.floor);
}

inline UncertaintyModel fit_uncertainty(const Mlp& base, const Dataset& data,
                                        std::span<const std::size_t> rows,
                                        const MlpTrainConfig& cfg,
                                        TrainStats* stats = nullptr) {
  require(data.task == TaskKind::Regression,
          "fit_uncertainty: residual model applies to regression tasks");
  std::vector<double> resid;
  resid.reserve(rows.size());
  for (std::size_t r : rows) {
    resid.push_back(std::fabs(predict_scalar(base, data.row(r)) - data.targets[r]));
  }
  UncertaintyModel u;
  u.net = detail::train_mlp_core(data, rows, resid, TaskKind::Regression, 1, cfg, stats);
  return u;
}

}  // namespace comicl
