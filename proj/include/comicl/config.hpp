#pragma once

// Run configuration: one JSON file drives every pipeline stage.  Parsing is
// strict — unknown keys are errors naming the full key path — so typos in
// alpha, method, or hyperparameters cannot pass silently.  Every random
// stream in a run derives from the single top-level seed.

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "comicl/experiment.hpp"

namespace comicl {

struct RunConfig {
  std::uint64_t seed = 1;

  // problem
  ProblemKind problem = ProblemKind::Reactor;

  // data
  std::string data_path = "data.csv";
  std::size_t n_rows = 1000;
  double noise_sigma = 0.5;

  // model
  ModelFamily family = ModelFamily::Mlp;
  std::string model_path = "model.json";
  std::string uncertainty_path = "uncertainty.json";
  TrainSettings train;

  // conformal
  double alpha = 0.1;
  bool mondrian = false;
  double train_fraction = 0.8;
  std::string calibration_path = "calibration.json";

  // solver
  double rel_gap = 0.01;
  std::int64_t node_limit = -1;
  double time_limit_s = -1.0;

  // experiment
  Method method = Method::Cmicl;
  std::size_t n_instances = 100;
  std::size_t ensemble_size = 10;
  std::size_t jobs = 1;
  std::string report_path = "report.csv";

  ExperimentConfig experiment_config() const {
    ExperimentConfig cfg;
    cfg.problem = problem;
    cfg.method = method;
    cfg.family = family;
    cfg.alpha = alpha;
    cfg.mondrian = mondrian;
    cfg.n_train = n_rows;
    cfg.noise_sigma = noise_sigma;
    cfg.n_instances = n_instances;
    cfg.seed = seed;
    cfg.rel_gap = rel_gap;
    cfg.time_limit_s = time_limit_s;
    cfg.jobs = jobs;
    cfg.ensemble_size = ensemble_size;
    cfg.train_fraction = train_fraction;
    cfg.train = train;
    return cfg;
  }
};

namespace detail {

// Tracks which keys of one JSON object were consumed; anything left over is
// reported with its full dotted path.
class SectionReader {
 public:
  SectionReader(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    require(j_.is_object(), "config: " + path_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void read(const char* key, T& into) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      into = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error("config: " + dotted(key) + " has the wrong type");
    }
  }

  void read_string(const char* key, std::string& into) { read(key, into); }

  nlohmann::json section(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string dotted(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        throw Error("config: unknown key '" + dotted(key.c_str()) + "'");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void parse_problem(const nlohmann::json& j, RunConfig& cfg) {
  SectionReader r(j, "problem");
  std::string kind;
  r.read_string("kind", kind);
  if (!kind.empty()) {
    try {
      cfg.problem = problem_kind_from_text(kind);
    } catch (const Error& e) {
      throw Error("config: problem.kind: " + std::string(e.what()));
    }
  }
  r.finish();
}

inline void parse_data(const nlohmann::json& j, RunConfig& cfg) {
  SectionReader r(j, "data");
  r.read_string("path", cfg.data_path);
  r.read("n_rows", cfg.n_rows);
  r.read("noise_sigma", cfg.noise_sigma);
  r.finish();
  require(cfg.n_rows >= 1, "config: data.n_rows must be positive");
  require(cfg.noise_sigma >= 0.0, "config: data.noise_sigma must be >= 0");
}

inline void parse_model(const nlohmann::json& j, RunConfig& cfg) {
  SectionReader r(j, "model");
  std::string family;
  r.read_string("family", family);
  if (!family.empty()) {
    try {
      cfg.family = family_from_text(family);
    } catch (const Error& e) {
      throw Error("config: model.family: " + std::string(e.what()));
    }
  }
  r.read_string("path", cfg.model_path);
  r.read_string("uncertainty_path", cfg.uncertainty_path);

  std::vector<std::size_t> hidden;
  r.read("hidden", hidden);
  if (!hidden.empty()) cfg.train.mlp.hidden = hidden;
  r.read("epochs", cfg.train.mlp.epochs);
  r.read("learning_rate", cfg.train.mlp.learning_rate);
  r.read("l2", cfg.train.mlp.l2);

  std::vector<std::size_t> u_hidden;
  r.read("uncertainty_hidden", u_hidden);
  if (!u_hidden.empty()) cfg.train.uncertainty.hidden = u_hidden;
  r.read("uncertainty_epochs", cfg.train.uncertainty.epochs);
  r.read("uncertainty_learning_rate", cfg.train.uncertainty.learning_rate);

  // Tree hyperparameters; each applies to the families that use it.
  if (r.has("max_depth")) {
    std::size_t depth = 0;
    r.read("max_depth", depth);
    cfg.train.cart.max_depth = depth;
    cfg.train.forest.max_depth = depth;
    cfg.train.gbt.max_depth = depth;
    cfg.train.lmdt.max_depth = depth;
  }
  if (r.has("min_samples_split")) {
    std::size_t mss = 0;
    r.read("min_samples_split", mss);
    cfg.train.cart.min_samples_split = mss;
    cfg.train.forest.min_samples_split = mss;
    cfg.train.gbt.min_samples_split = mss;
    cfg.train.lmdt.min_samples_split = mss;
  }
  if (r.has("n_trees")) {
    std::size_t n = 0;
    r.read("n_trees", n);
    cfg.train.forest.n_trees = n;
    cfg.train.gbt.n_stages = n;
  }
  r.read("feature_fraction", cfg.train.forest.feature_fraction);
  r.read("boost_learning_rate", cfg.train.gbt.learning_rate);
  r.finish();
  require(cfg.train.mlp.learning_rate > 0.0,
          "config: model.learning_rate must be positive");
}

inline void parse_conformal(const nlohmann::json& j, RunConfig& cfg) {
  SectionReader r(j, "conformal");
  r.read("alpha", cfg.alpha);
  r.read("mondrian", cfg.mondrian);
  r.read("train_fraction", cfg.train_fraction);
  r.read_string("path", cfg.calibration_path);
  r.finish();
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0,
          "config: conformal.alpha must be in (0,1)");
  require(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0,
          "config: conformal.train_fraction must be in (0,1)");
}

inline void parse_solver(const nlohmann::json& j, RunConfig& cfg) {
  SectionReader r(j, "solver");
  r.read("rel_gap", cfg.rel_gap);
  r.read("node_limit", cfg.node_limit);
  r.read("time_limit_seconds", cfg.time_limit_s);
  r.finish();
  require(cfg.rel_gap >= 0.0, "config: solver.rel_gap must be >= 0");
}

inline void parse_experiment(const nlohmann::json& j, RunConfig& cfg) {
  SectionReader r(j, "experiment");
  std::string method;
  r.read_string("method", method);
  if (!method.empty()) {
    try {
      cfg.method = method_from_text(method);
    } catch (const Error& e) {
      throw Error("config: experiment.method: " + std::string(e.what()));
    }
  }
  r.read("n_instances", cfg.n_instances);
  r.read("ensemble_size", cfg.ensemble_size);
  r.read("jobs", cfg.jobs);
  r.read_string("report_path", cfg.report_path);
  r.finish();
  require(cfg.n_instances >= 1, "config: experiment.n_instances must be >= 1");
  require(cfg.ensemble_size >= 1, "config: experiment.ensemble_size must be >= 1");
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  detail::SectionReader root(j, "");
  root.read("seed", cfg.seed);
  if (root.has("problem")) detail::parse_problem(root.section("problem"), cfg);
  if (root.has("data")) detail::parse_data(root.section("data"), cfg);
  if (root.has("model")) detail::parse_model(root.section("model"), cfg);
  if (root.has("conformal"))
    detail::parse_conformal(root.section("conformal"), cfg);
  if (root.has("solver")) detail::parse_solver(root.section("solver"), cfg);
  if (root.has("experiment"))
    detail::parse_experiment(root.section("experiment"), cfg);
  root.finish();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace comicl
