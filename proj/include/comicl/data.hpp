#pragma once

// Tabular datasets: CSV load/store, schema checks, and train/calibration
// splitting.  Features are dense doubles; the target is either a real value
// (column "y") or an integer class index (column "label").

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "comicl/common.hpp"
#include "comicl/rng.hpp"

namespace comicl {

struct Dataset {
  TaskKind task = TaskKind::Regression;
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::vector<double> features;  // row-major n_rows x n_features
  std::vector<double> targets;   // class indices stored as exact doubles
  int n_classes = 0;             // classification only
  std::vector<Interval> bounds;  // per-feature box

  std::span<const double> row(std::size_t i) const {
    require(i < n_rows, "Dataset::row: index out of range");
    return {features.data() + i * n_features, n_features};
  }
  int label(std::size_t i) const {
    require(task == TaskKind::Classification, "Dataset::label: not a classification set");
    return static_cast<int>(targets[i]);
  }

  std::vector<std::size_t> all_rows() const {
    std::vector<std::size_t> idx(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) idx[i] = i;
    return idx;
  }

  void validate() const {
    require(n_rows > 0, "dataset has no rows");
    require(n_features > 0, "dataset has no features");
    require(features.size() == n_rows * n_features, "feature buffer size mismatch");
    require(targets.size() == n_rows, "target buffer size mismatch");
    require(feature_names.size() == n_features, "feature name count mismatch");
    require(bounds.size() == n_features, "bounds count mismatch");
    for (double v : features) {
      require(std::isfinite(v), "dataset contains a non-finite feature value");
    }
    if (task == TaskKind::Classification) {
      require(n_classes >= 2, "classification dataset needs at least 2 classes");
      for (double t : targets) {
        require(t == std::floor(t) && t >= 0 && t < n_classes,
                "class label out of range");
      }
    } else {
      for (double t : targets) {
        require(std::isfinite(t), "dataset contains a non-finite target");
      }
    }
  }
};

// Train/calibration row split.
struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> calib;
};

// Shuffles rows with the given seed and cuts at round(fraction * n).
inline DataSplit split_dataset(const Dataset& data, double fraction,
                               std::uint64_t seed) {
  require(fraction > 0.0 && fraction < 1.0, "split fraction must be in (0,1)");
  std::vector<std::size_t> idx = data.all_rows();
  Rng rng(seed);
  rng.shuffle(idx);
  const auto n_train = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(data.n_rows)));
  require(n_train > 0, "split leaves the training side empty");
  require(n_train < data.n_rows, "split leaves the calibration side empty");
  DataSplit s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.calib.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return s;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_cell(const std::string& cell, std::size_t row1,
                         std::size_t col1) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != cell.size() || cell.empty() || !std::isfinite(v)) {
    fail("non-numeric cell at row %zu, col %zu: '%s'", row1, col1, cell.c_str());
  }
  return v;
}

}  // namespace detail

// Loads a CSV whose header names one target column ("y" for regression,
// "label" for classification); every other column is a feature, in header
// order.  Feature bounds are the empirical min/max unless `declared_bounds`
// is provided.  Row/column indices in error messages are 1-based over data
// rows (the header is row 0).
inline Dataset load_csv(const std::string& path, TaskKind task,
                        std::span<const Interval> declared_bounds = {}) {
  std::ifstream in(path);
  if (!in.good()) throw Error("cannot open CSV file: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "CSV file is empty: " + path);
  const std::vector<std::string> header = detail::split_csv_line(line);
  const std::string target_name =
      task == TaskKind::Regression ? "y" : "label";
  std::ptrdiff_t target_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == target_name) target_col = static_cast<std::ptrdiff_t>(j);
  }
  if (target_col < 0) {
    throw Error("CSV file " + path + " has no target column '" + target_name + "'");
  }

  Dataset d;
  d.task = task;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) != target_col) {
      d.feature_names.push_back(header[j]);
    }
  }
  d.n_features = d.feature_names.size();
  require(d.n_features > 0, "CSV file has no feature columns: " + path);

  std::size_t row1 = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row1;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      fail("row %zu has %zu cells, expected %zu", row1, cells.size(), header.size());
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = detail::parse_cell(cells[j], row1, j + 1);
      if (static_cast<std::ptrdiff_t>(j) == target_col) {
        d.targets.push_back(v);
      } else {
        d.features.push_back(v);
      }
    }
  }
  d.n_rows = d.targets.size();
  require(d.n_rows > 0, "CSV file has no data rows: " + path);

  if (task == TaskKind::Classification) {
    int max_label = 0;
    for (double t : d.targets) {
      require(t == std::floor(t) && t >= 0.0,
              "classification labels must be non-negative integers");
      max_label = std::max(max_label, static_cast<int>(t));
    }
    d.n_classes = max_label + 1;
  }

  if (!declared_bounds.empty()) {
    require(declared_bounds.size() == d.n_features,
            "declared_bounds size does not match feature count");
    d.bounds.assign(declared_bounds.begin(), declared_bounds.end());
  } else {
    d.bounds.assign(d.n_features, Interval{kInf, -kInf});
    for (std::size_t i = 0; i < d.n_rows; ++i) {
      for (std::size_t j = 0; j < d.n_features; ++j) {
        const double v = d.features[i * d.n_features + j];
        d.bounds[j].lo = std::min(d.bounds[j].lo, v);
        d.bounds[j].hi = std::max(d.bounds[j].hi, v);
      }
    }
  }
  d.validate();
  return d;
}

// Writes the dataset as CSV with %.17g cells (lossless double round trip).
inline void save_csv(const Dataset& d, const std::string& path) {
  d.validate();
  std::ofstream out(path);
  if (!out.good()) throw Error("cannot write CSV file: " + path);
  for (const auto& n : d.feature_names) out << n << ",";
  out << (d.task == TaskKind::Regression ? "y" : "label") << "\n";
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    for (std::size_t j = 0; j < d.n_features; ++j) {
      out << detail::format("%.17g", d.features[i * d.n_features + j]) << ",";
    }
    if (d.task == TaskKind::Classification) {
      out << static_cast<int>(d.targets[i]) << "\n";
    } else {
      out << detail::format("%.17g", d.targets[i]) << "\n";
    }
  }
  require(out.good(), "write failed for CSV file: " + path);
}

}  // namespace comicl
