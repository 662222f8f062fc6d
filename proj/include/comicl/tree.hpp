#pragma once

// Regression trees and tree ensembles: CART, random forest, gradient
// boosting, and trees with ridge-fit linear leaves.
//
// Split search: thresholds are midpoints between consecutive distinct sorted
// feature values; a row goes left iff x[feature] < threshold.  The best
// split maximizes the SSE reduction; ties break toward the lowest feature
// index, then the lowest threshold (guaranteed by scanning features and
// thresholds in ascending order and requiring strict improvement).  A node
// becomes a leaf when the depth limit is reached, it has fewer rows than
// min_samples_split, or no split strictly reduces the SSE (constant targets
// included).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "comicl/common.hpp"
#include "comicl/data.hpp"
#include "comicl/rng.hpp"

namespace comicl {

struct TreeNode {
  bool leaf = true;
  int feature = -1;         // internal nodes
  double threshold = 0.0;
  int left = -1, right = -1;
  double value = 0.0;            // constant leaf
  std::vector<double> coef;      // linear leaf (empty for constant leaves)
  double intercept = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0

  const TreeNode& root() const {
    require(!nodes.empty(), "Tree is empty");
    return nodes.front();
  }
};

inline double predict_tree(const Tree& t, std::span<const double> x) {
  int idx = 0;
  while (true) {
    const TreeNode& n = t.nodes[static_cast<std::size_t>(idx)];
    if (n.leaf) {
      if (n.coef.empty()) return n.value;
      double s = n.intercept;
      require(n.coef.size() == x.size(), "linear leaf dimension mismatch");
      for (std::size_t j = 0; j < x.size(); ++j) s += n.coef[j] * x[j];
      return s;
    }
    idx = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
}

enum class Combine { Single, Average, Boosted };

struct Ensemble {
  Combine combine = Combine::Single;
  std::vector<Tree> trees;
  double base = 0.0;  // Boosted offset
  double lr = 1.0;    // Boosted stage weight
  bool linear_leaves = false;
  std::size_t n_features = 0;
};

inline double predict_ensemble(const Ensemble& e, std::span<const double> x) {
  require(x.size() == e.n_features, "predict_ensemble: input dimension mismatch");
  require(!e.trees.empty(), "predict_ensemble: empty ensemble");
  switch (e.combine) {
    case Combine::Single:
      return predict_tree(e.trees.front(), x);
    case Combine::Average: {
      double s = 0.0;
      for (const Tree& t : e.trees) s += predict_tree(t, x);
      return s / static_cast<double>(e.trees.size());
    }
    case Combine::Boosted: {
      double s = e.base;
      for (const Tree& t : e.trees) s += e.lr * predict_tree(t, x);
      return s;
    }
  }
  throw Error("predict_ensemble: bad combine mode");
}

struct CartConfig {
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 2;
  double feature_fraction = 1.0;  // per-node candidate subset, ceil(frac * d)
};

namespace detail {

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best (feature, threshold) over the candidate features, by SSE reduction.
inline SplitChoice best_split(const Dataset& data,
                              std::span<const std::size_t> rows,
                              std::span<const double> targets,
                              std::span<const std::size_t> features) {
  const std::size_t n = rows.size();
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += targets[i];
    sum2 += targets[i] * targets[i];
  }
  const double parent_sse = sum2 - sum * sum / static_cast<double>(n);

  SplitChoice best;
  std::vector<std::pair<double, double>> vals(n);  // (feature value, target)
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) {
      vals[i] = {data.features[rows[i] * data.n_features + f], targets[i]};
    }
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double lsum = 0.0, lsum2 = 0.0;
    for (std::size_t p = 1; p < n; ++p) {
      lsum += vals[p - 1].second;
      lsum2 += vals[p - 1].second * vals[p - 1].second;
      if (vals[p - 1].first >= vals[p].first) continue;  // equal values stay together
      const double rsum = sum - lsum;
      const double rsum2 = sum2 - lsum2;
      const double sse_l = lsum2 - lsum * lsum / static_cast<double>(p);
      const double sse_r = rsum2 - rsum * rsum / static_cast<double>(n - p);
      const double gain = parent_sse - sse_l - sse_r;
      if (gain > best.gain + 1e-12) {  // strict: first best wins ties
        best.found = true;
        best.feature = f;
        best.threshold = 0.5 * (vals[p - 1].first + vals[p].first);
        best.gain = gain;
      }
    }
  }
  if (best.gain <= 1e-12) best.found = false;
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::span<const double> targets_by_row,
              const CartConfig& cfg, Rng* rng)
      : data_(data), targets_(targets_by_row), cfg_(cfg), rng_(rng) {
    require(cfg.max_depth >= 1, "fit_tree: max_depth must be >= 1");
    require(cfg.min_samples_split >= 2, "fit_tree: min_samples_split must be >= 2");
    require(cfg.feature_fraction > 0.0 && cfg.feature_fraction <= 1.0,
            "fit_tree: feature_fraction must be in (0,1]");
    if (cfg.feature_fraction < 1.0) {
      require(rng != nullptr, "fit_tree: feature subsampling needs a generator");
    }
  }

  Tree build(std::span<const std::size_t> rows) {
    require(!rows.empty(), "fit_tree: no rows");
    tree_.nodes.clear();
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  // Appends a node for `rows` and returns its index.  Children are grown
  // left first, so node creation order (and thus generator consumption) is
  // a fixed depth-first order.
  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int my_idx = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    std::vector<double> t(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) t[i] = targets_[rows[i]];
    const double mean_t =
        std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());

    SplitChoice split;
    if (depth < cfg_.max_depth && rows.size() >= cfg_.min_samples_split) {
      split = detail::best_split(data_, rows, t, candidate_features());
    }
    if (!split.found) {
      tree_.nodes[my_idx].leaf = true;
      tree_.nodes[my_idx].value = mean_t;
      return my_idx;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      const double v = data_.features[r * data_.n_features + split.feature];
      (v < split.threshold ? left : right).push_back(r);
    }
    require(!left.empty() && !right.empty(),
            "fit_tree: midpoint split produced an empty child");
    rows.clear();
    rows.shrink_to_fit();

    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[my_idx];
    node.leaf = false;
    node.feature = static_cast<int>(split.feature);
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return my_idx;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = data_.n_features;
    if (cfg_.feature_fraction >= 1.0) {
      std::vector<std::size_t> all(d);
      std::iota(all.begin(), all.end(), 0);
      return all;
    }
    const auto k = static_cast<std::size_t>(
        std::ceil(cfg_.feature_fraction * static_cast<double>(d)));
    std::vector<std::size_t> pool(d);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng_->index(d - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());  // ascending: keeps tie-break order
    return pool;
  }

  const Dataset& data_;
  std::span<const double> targets_;  // indexed by dataset row id
  CartConfig cfg_;
  Rng* rng_;
  Tree tree_;
};

// Ridge regression (weights regularized, intercept free) via Gaussian
// elimination with partial pivoting on the normal equations.
inline void ridge_fit(const Dataset& data, std::span<const std::size_t> rows,
                      std::span<const double> targets_by_row, double lambda,
                      std::vector<double>* coef, double* intercept) {
  require(!rows.empty(), "ridge_fit: leaf has no rows");
  const std::size_t d = data.n_features;
  const std::size_t k = d + 1;  // + intercept
  std::vector<double> a(k * k, 0.0), b(k, 0.0);
  std::vector<double> xi(k);
  for (std::size_t r : rows) {
    std::span<const double> x = data.row(r);
    for (std::size_t j = 0; j < d; ++j) xi[j] = x[j];
    xi[d] = 1.0;
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = 0; q < k; ++q) a[p * k + q] += xi[p] * xi[q];
      b[p] += xi[p] * targets_by_row[r];
    }
  }
  for (std::size_t j = 0; j < d; ++j) a[j * k + j] += lambda;

  // Solve a * beta = b.
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r2 = col + 1; r2 < k; ++r2) {
      if (std::fabs(a[perm[r2] * k + col]) > std::fabs(a[perm[piv] * k + col])) piv = r2;
    }
    std::swap(perm[col], perm[piv]);
    const double pv = a[perm[col] * k + col];
    require(std::fabs(pv) > 1e-14, "ridge_fit: singular normal equations");
    for (std::size_t r2 = col + 1; r2 < k; ++r2) {
      const double f = a[perm[r2] * k + col] / pv;
      if (f == 0.0) continue;
      for (std::size_t c2 = col; c2 < k; ++c2) {
        a[perm[r2] * k + c2] -= f * a[perm[col] * k + c2];
      }
      b[perm[r2]] -= f * b[perm[col]];
    }
  }
  std::vector<double> beta(k);
  for (std::size_t col = k; col-- > 0;) {
    double s = b[perm[col]];
    for (std::size_t c2 = col + 1; c2 < k; ++c2) s -= a[perm[col] * k + c2] * beta[c2];
    beta[col] = s / a[perm[col] * k + col];
  }
  coef->assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(d));
  *intercept = beta[d];
}

// Row ids reaching each leaf, in tree order.
inline void leaf_rows(const Tree& t, const Dataset& data,
                      std::span<const std::size_t> rows,
                      std::vector<std::vector<std::size_t>>* per_node) {
  per_node->assign(t.nodes.size(), {});
  for (std::size_t r : rows) {
    int idx = 0;
    while (!t.nodes[static_cast<std::size_t>(idx)].leaf) {
      const TreeNode& n = t.nodes[static_cast<std::size_t>(idx)];
      idx = data.features[r * data.n_features + static_cast<std::size_t>(n.feature)] <
                    n.threshold
                ? n.left
                : n.right;
    }
    (*per_node)[static_cast<std::size_t>(idx)].push_back(r);
  }
}

}  // namespace detail

// Single CART regression tree on the dataset targets.
inline Ensemble fit_cart(const Dataset& data, std::span<const std::size_t> rows,
                         const CartConfig& cfg) {
  require(data.task == TaskKind::Regression, "fit_cart: regression targets required");
  detail::TreeBuilder builder(data, data.targets, cfg, nullptr);
  Ensemble e;
  e.combine = Combine::Single;
  e.trees.push_back(builder.build(rows));
  e.n_features = data.n_features;
  return e;
}

struct ForestConfig {
  std::size_t n_trees = 15;
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 3;
  double feature_fraction = 0.6;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

// Random forest: each tree sees a bootstrap resample of `rows` (n draws with
// replacement, drawn before any node-level feature sampling from the same
// per-tree generator) and averages into the prediction.
inline Ensemble fit_forest(const Dataset& data, std::span<const std::size_t> rows,
                           const ForestConfig& cfg) {
  require(data.task == TaskKind::Regression, "fit_forest: regression targets required");
  require(cfg.n_trees >= 1, "fit_forest: need at least one tree");
  Ensemble e;
  e.combine = Combine::Average;
  e.n_features = data.n_features;
  CartConfig cart;
  cart.max_depth = cfg.max_depth;
  cart.min_samples_split = cfg.min_samples_split;
  cart.feature_fraction = cfg.feature_fraction;
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng rng(derive_seed(cfg.seed, "forest-tree", t));
    std::vector<std::size_t> sample;
    if (cfg.bootstrap) {
      sample.resize(rows.size());
      for (auto& s : sample) s = rows[rng.index(rows.size())];
    } else {
      sample.assign(rows.begin(), rows.end());
    }
    detail::TreeBuilder builder(data, data.targets, cart, &rng);
    e.trees.push_back(builder.build(sample));
  }
  return e;
}

struct GbtConfig {
  std::size_t n_stages = 15;
  double learning_rate = 0.2;
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 5;
};

// Gradient boosting with squared loss: the base prediction is the target
// mean; each stage fits a CART tree to the current residuals.
inline Ensemble fit_gbt(const Dataset& data, std::span<const std::size_t> rows,
                        const GbtConfig& cfg) {
  require(data.task == TaskKind::Regression, "fit_gbt: regression targets required");
  require(cfg.n_stages >= 1, "fit_gbt: need at least one stage");
  require(cfg.learning_rate > 0.0, "fit_gbt: learning rate must be positive");
  Ensemble e;
  e.combine = Combine::Boosted;
  e.lr = cfg.learning_rate;
  e.n_features = data.n_features;

  double base = 0.0;
  for (std::size_t r : rows) base += data.targets[r];
  base /= static_cast<double>(rows.size());
  e.base = base;

  // Residuals indexed by dataset row id (rows not in `rows` stay unused).
  std::vector<double> resid(data.n_rows, 0.0);
  for (std::size_t r : rows) resid[r] = data.targets[r] - base;

  CartConfig cart;
  cart.max_depth = cfg.max_depth;
  cart.min_samples_split = cfg.min_samples_split;
  for (std::size_t stage = 0; stage < cfg.n_stages; ++stage) {
    detail::TreeBuilder builder(data, resid, cart, nullptr);
    Tree t = builder.build(rows);
    for (std::size_t r : rows) {
      resid[r] -= cfg.learning_rate * predict_tree(t, data.row(r));
    }
    e.trees.push_back(std::move(t));
  }
  return e;
}

struct LmdtConfig {
  std::size_t max_depth = 5;
  std::size_t min_samples_split = 10;
};

// Linear model decision tree: CART structure, then an independent ridge fit
// (lambda = kRidgeLambda, intercept unregularized) over all features in each
// leaf.
inline Ensemble fit_lmdt(const Dataset& data, std::span<const std::size_t> rows,
                         const LmdtConfig& cfg) {
  require(data.task == TaskKind::Regression, "fit_lmdt: regression targets required");
  CartConfig cart;
  cart.max_depth = cfg.max_depth;
  cart.min_samples_split = cfg.min_samples_split;
  detail::TreeBuilder builder(data, data.targets, cart, nullptr);
  Tree t = builder.build(rows);

  std::vector<std::vector<std::size_t>> per_node;
  detail::leaf_rows(t, data, rows, &per_node);
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    TreeNode& n = t.nodes[i];
    if (!n.leaf) continue;
    require(!per_node[i].empty(), "fit_lmdt: leaf with no training rows");
    detail::ridge_fit(data, per_node[i], data.targets, kRidgeLambda, &n.coef,
                      &n.intercept);
  }
  Ensemble e;
  e.combine = Combine::Single;
  e.linear_leaves = true;
  e.n_features = data.n_features;
  e.trees.push_back(std::move(t));
  return e;
}

}  // namespace comicl
