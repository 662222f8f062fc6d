// Strict run-configuration parsing: defaults, full round-trips, unknown-key
// rejection with dotted paths, and value validation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "catch2/catch_amalgamated.hpp"
#include "comicl/config.hpp"

using namespace comicl;
using nlohmann::json;

TEST_CASE("empty config yields the documented defaults") {
  const RunConfig cfg = parse_config(json::object());
  CHECK(cfg.seed == 1);
  CHECK(cfg.problem == ProblemKind::Reactor);
  CHECK(cfg.data_path == "data.csv");
  CHECK(cfg.n_rows == 1000);
  CHECK(cfg.noise_sigma == 0.5);
  CHECK(cfg.family == ModelFamily::Mlp);
  CHECK(cfg.train.mlp.hidden == std::vector<std::size_t>{32, 32});
  CHECK(cfg.train.mlp.epochs == 2000);
  CHECK(cfg.alpha == 0.1);
  CHECK_FALSE(cfg.mondrian);
  CHECK(cfg.train_fraction == 0.8);
  CHECK(cfg.rel_gap == 0.01);
  CHECK(cfg.method == Method::Cmicl);
  CHECK(cfg.n_instances == 100);
  CHECK(cfg.ensemble_size == 10);
}

TEST_CASE("every section parses into the matching fields") {
  const json j = {
      {"seed", 99},
      {"problem", {{"kind", "basket"}}},
      {"data", {{"path", "d.csv"}, {"n_rows", 50}, {"noise_sigma", 0.0}}},
      {"model",
       {{"family", "gbt"},
        {"path", "m.json"},
        {"uncertainty_path", "u.json"},
        {"hidden", {7, 3}},
        {"epochs", 12},
        {"learning_rate", 0.2},
        {"l2", 0.05},
        {"uncertainty_hidden", {4}},
        {"uncertainty_epochs", 9},
        {"max_depth", 3},
        {"min_samples_split", 6},
        {"n_trees", 21},
        {"feature_fraction", 0.5},
        {"boost_learning_rate", 0.15}}},
      {"conformal",
       {{"alpha", 0.05},
        {"mondrian", true},
        {"train_fraction", 0.75},
        {"path", "cal.json"}}},
      {"solver",
       {{"rel_gap", 0.0}, {"node_limit", 500}, {"time_limit_seconds", 30.0}}},
      {"experiment",
       {{"method", "wmicl"},
        {"n_instances", 7},
        {"ensemble_size", 5},
        {"jobs", 4},
        {"report_path", "r.csv"}}}};
  const RunConfig cfg = parse_config(j);
  CHECK(cfg.seed == 99);
  CHECK(cfg.problem == ProblemKind::Basket);
  CHECK(cfg.data_path == "d.csv");
  CHECK(cfg.n_rows == 50);
  CHECK(cfg.noise_sigma == 0.0);
  CHECK(cfg.family == ModelFamily::Gbt);
  CHECK(cfg.model_path == "m.json");
  CHECK(cfg.uncertainty_path == "u.json");
  CHECK(cfg.train.mlp.hidden == std::vector<std::size_t>{7, 3});
  CHECK(cfg.train.mlp.epochs == 12);
  CHECK(cfg.train.mlp.learning_rate == 0.2);
  CHECK(cfg.train.mlp.l2 == 0.05);
  CHECK(cfg.train.uncertainty.hidden == std::vector<std::size_t>{4});
  CHECK(cfg.train.uncertainty.epochs == 9);
  CHECK(cfg.train.cart.max_depth == 3);
  CHECK(cfg.train.forest.max_depth == 3);
  CHECK(cfg.train.gbt.max_depth == 3);
  CHECK(cfg.train.lmdt.min_samples_split == 6);
  CHECK(cfg.train.forest.n_trees == 21);
  CHECK(cfg.train.gbt.n_stages == 21);
  CHECK(cfg.train.forest.feature_fraction == 0.5);
  CHECK(cfg.train.gbt.learning_rate == 0.15);
  CHECK(cfg.alpha == 0.05);
  CHECK(cfg.mondrian);
  CHECK(cfg.train_fraction == 0.75);
  CHECK(cfg.calibration_path == "cal.json");
  CHECK(cfg.rel_gap == 0.0);
  CHECK(cfg.node_limit == 500);
  CHECK(cfg.time_limit_s == 30.0);
  CHECK(cfg.method == Method::Wmicl);
  CHECK(cfg.n_instances == 7);
  CHECK(cfg.ensemble_size == 5);
  CHECK(cfg.jobs == 4);
  CHECK(cfg.report_path == "r.csv");
}

TEST_CASE("unknown keys are rejected with their dotted path") {
  CHECK_THROWS_WITH(parse_config(json{{"seeed", 1}}),
                    Catch::Matchers::ContainsSubstring("unknown key 'seeed'"));
  CHECK_THROWS_WITH(
      parse_config(json{{"model", {{"hiden", {3}}}}}),
      Catch::Matchers::ContainsSubstring("unknown key 'model.hiden'"));
  CHECK_THROWS_WITH(
      parse_config(json{{"conformal", {{"alfa", 0.1}}}}),
      Catch::Matchers::ContainsSubstring("unknown key 'conformal.alfa'"));
  CHECK_THROWS_WITH(
      parse_config(json{{"experiment", {{"method", "cmicl"}, {"js", 2}}}}),
      Catch::Matchers::ContainsSubstring("unknown key 'experiment.js'"));
}

TEST_CASE("bad values and types name the failing key") {
  CHECK_THROWS_WITH(
      parse_config(json{{"conformal", {{"alpha", 1.5}}}}),
      Catch::Matchers::ContainsSubstring("conformal.alpha"));
  CHECK_THROWS_WITH(
      parse_config(json{{"conformal", {{"train_fraction", 1.0}}}}),
      Catch::Matchers::ContainsSubstring("conformal.train_fraction"));
  CHECK_THROWS_WITH(parse_config(json{{"data", {{"n_rows", 0}}}}),
                    Catch::Matchers::ContainsSubstring("data.n_rows"));
  CHECK_THROWS_WITH(parse_config(json{{"solver", {{"rel_gap", -0.1}}}}),
                    Catch::Matchers::ContainsSubstring("solver.rel_gap"));
  CHECK_THROWS_WITH(parse_config(json{{"model", {{"epochs", "many"}}}}),
                    Catch::Matchers::ContainsSubstring("model.epochs") &&
                        Catch::Matchers::ContainsSubstring("wrong type"));
  CHECK_THROWS_WITH(parse_config(json{{"problem", {{"kind", "diet"}}}}),
                    Catch::Matchers::ContainsSubstring("problem.kind"));
  CHECK_THROWS_WITH(parse_config(json{{"experiment", {{"method", "mlp"}}}}),
                    Catch::Matchers::ContainsSubstring("experiment.method"));
  CHECK_THROWS_WITH(parse_config(json{{"model", {{"family", "micl"}}}}),
                    Catch::Matchers::ContainsSubstring("model.family"));
  CHECK_THROWS_WITH(parse_config(json{{"data", 3}}),
                    Catch::Matchers::ContainsSubstring("data must be an object"));
}

TEST_CASE("config files load from disk with path-bearing errors") {
  namespace fs = std::filesystem;
  const std::string good = (fs::temp_directory_path() / "comicl_cfg.json").string();
  {
    std::ofstream out(good);
    out << R"({"seed": 5, "problem": {"kind": "reactor"}})";
  }
  const RunConfig cfg = load_config(good);
  CHECK(cfg.seed == 5);
  std::remove(good.c_str());

  CHECK_THROWS_WITH(load_config("/nonexistent/comicl.json"),
                    Catch::Matchers::ContainsSubstring("cannot open config file"));

  const std::string bad = (fs::temp_directory_path() / "comicl_bad.json").string();
  {
    std::ofstream out(bad);
    out << "{ not json";
  }
  CHECK_THROWS_WITH(load_config(bad),
                    Catch::Matchers::ContainsSubstring("not valid JSON"));
  std::remove(bad.c_str());
}

TEST_CASE("experiment settings derive from the run config") {
  json j = {{"seed", 77},
            {"problem", {{"kind", "basket"}}},
            {"data", {{"n_rows", 333}, {"noise_sigma", 0.25}}},
            {"conformal", {{"alpha", 0.2}, {"mondrian", true}}},
            {"solver", {{"rel_gap", 0.05}}},
            {"experiment", {{"method", "micl"}, {"n_instances", 9}, {"jobs", 2}}}};
  const ExperimentConfig e = parse_config(j).experiment_config();
  CHECK(e.problem == ProblemKind::Basket);
  CHECK(e.method == Method::Micl);
  CHECK(e.alpha == 0.2);
  CHECK(e.mondrian);
  CHECK(e.n_train == 333);
  CHECK(e.noise_sigma == 0.25);
  CHECK(e.n_instances == 9);
  CHECK(e.seed == 77);
  CHECK(e.rel_gap == 0.05);
  CHECK(e.jobs == 2);
}
