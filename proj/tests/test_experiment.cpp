// Experiment layer: training protocols, per-instance solves, vote quorum,
// report round-trips, and aggregation arithmetic.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "comicl/experiment.hpp"

using namespace comicl;

namespace {

// Small, fast settings shared by the solve tests.
ExperimentConfig quick_config(ProblemKind problem, Method method) {
  ExperimentConfig cfg;
  cfg.problem = problem;
  cfg.method = method;
  cfg.alpha = 0.25;
  cfg.n_train = 200;
  cfg.n_instances = 2;
  cfg.seed = 21;
  cfg.rel_gap = 0.0;
  cfg.ensemble_size = 3;
  cfg.train.mlp.hidden = {4};
  cfg.train.mlp.epochs = 200;
  cfg.train.mlp.learning_rate = 0.1;
  cfg.train.uncertainty.hidden = {3};
  cfg.train.uncertainty.epochs = 150;
  return cfg;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("vote threshold is the ceiling of (1-alpha)P") {
  CHECK(vote_threshold(10, 0.10) == 9);   // 0.9*10 must not round up to 10
  CHECK(vote_threshold(5, 0.10) == 5);    // ceil(4.5)
  CHECK(vote_threshold(20, 0.05) == 19);
  CHECK(vote_threshold(4, 0.50) == 2);
  CHECK(vote_threshold(1, 0.10) == 1);
  CHECK(vote_threshold(3, 0.999) == 1);   // floor at one member
  CHECK_THROWS_WITH(vote_threshold(0, 0.1),
                    Catch::Matchers::ContainsSubstring("empty"));
  CHECK_THROWS_WITH(vote_threshold(5, 0.0),
                    Catch::Matchers::ContainsSubstring("alpha"));
}

TEST_CASE("method and family names round-trip") {
  for (Method m : {Method::Micl, Method::Wmicl, Method::Cmicl}) {
    CHECK(method_from_text(method_text(m)) == m);
  }
  for (ModelFamily f : {ModelFamily::Mlp, ModelFamily::Cart, ModelFamily::Forest,
                        ModelFamily::Gbt, ModelFamily::Lmdt}) {
    CHECK(family_from_text(family_text(f)) == f);
  }
  CHECK_THROWS_WITH(method_from_text("mlp"),
                    Catch::Matchers::ContainsSubstring("unknown method"));
  CHECK_THROWS_WITH(family_from_text("micl"),
                    Catch::Matchers::ContainsSubstring("unknown model family"));
}

TEST_CASE("training protocols produce the advertised artifacts") {
  const Benchmark bench = make_benchmark(ProblemKind::Reactor);
  ExperimentConfig cfg = quick_config(ProblemKind::Reactor, Method::Micl);
  const Dataset data =
      sample_benchmark_data(bench, cfg.n_train, derive_seed(cfg.seed, "data"), 0.5);

  SECTION("point protocol: one model, no calibration") {
    const TrainedMethod tm = train_method(bench, data, cfg);
    CHECK(tm.models.size() == 1);
    CHECK_FALSE(tm.has_uncertainty);
  }

  SECTION("vote protocol: P distinct bootstrap models") {
    cfg.method = Method::Wmicl;
    const TrainedMethod tm = train_method(bench, data, cfg);
    REQUIRE(tm.models.size() == 3);
    const std::vector<double> probe{0.3, 0.7, 0.2, 0.9, 0.4};
    const double v0 = predictor_value(tm.models[0], probe);
    const double v1 = predictor_value(tm.models[1], probe);
    CHECK(v0 != v1);  // different bootstrap resamples and seeds
  }

  SECTION("conformal protocol: calibration over the held-out fifth") {
    cfg.method = Method::Cmicl;
    const TrainedMethod tm = train_method(bench, data, cfg);
    REQUIRE(tm.models.size() == 1);
    CHECK(tm.has_uncertainty);
    CHECK(tm.calib.kind == ScoreKind::NormalizedResidual);
    CHECK(tm.calib.n_total == 40);  // 20% of 200
    CHECK(std::isfinite(tm.calib.q_hat));
    CHECK(tm.calib.q_hat > 0.0);
  }

  SECTION("conformal protocol with group-conditional quantiles") {
    cfg.method = Method::Cmicl;
    cfg.mondrian = true;
    const TrainedMethod tm = train_method(bench, data, cfg);
    CHECK(tm.calib.mondrian);
    CHECK(tm.calib.groups.size() >= 1);
  }

  SECTION("classification outcomes require the mlp family") {
    const Benchmark basket = make_benchmark(ProblemKind::Basket);
    const Dataset bdata = sample_benchmark_data(basket, 100, 3, 0.0);
    cfg.family = ModelFamily::Cart;
    CHECK_THROWS_WITH(train_method(basket, bdata, cfg),
                      Catch::Matchers::ContainsSubstring("mlp family"));
  }
}

TEST_CASE("point-protocol solve keeps the prediction inside the target range") {
  const Benchmark bench = make_benchmark(ProblemKind::Reactor);
  const ExperimentConfig cfg = quick_config(ProblemKind::Reactor, Method::Micl);
  const Dataset data =
      sample_benchmark_data(bench, cfg.n_train, derive_seed(cfg.seed, "data"), 0.5);
  const TrainedMethod tm = train_method(bench, data, cfg);

  const InstanceRow row = solve_instance(bench, tm, Method::Micl, cfg, 0);
  REQUIRE(row.has_solution);
  CHECK(row.status == "optimal");
  REQUIRE(row.x.size() == 5);
  for (double v : row.x) {
    CHECK(v >= -1e-9);
    CHECK(v <= 1.0 + 1e-9);
  }
  // Native model value at the incumbent agrees with the encoded constraint.
  const double value = predictor_value(tm.models[0], row.x);
  CHECK(value >= bench.outcome.range.lo - 1e-4);
  CHECK(value <= bench.outcome.range.hi + 1e-4);
  CHECK_THAT(row.predictor_value, Catch::Matchers::WithinAbs(value, 1e-12));
}

TEST_CASE("conformal solve enforces the tightened interval natively") {
  const Benchmark bench = make_benchmark(ProblemKind::Reactor);
  ExperimentConfig cfg = quick_config(ProblemKind::Reactor, Method::Cmicl);
  const Dataset data =
      sample_benchmark_data(bench, cfg.n_train, derive_seed(cfg.seed, "data"), 0.5);
  const TrainedMethod tm = train_method(bench, data, cfg);

  const InstanceRow conf = solve_instance(bench, tm, Method::Cmicl, cfg, 0);
  REQUIRE(conf.has_solution);
  const double h = predictor_value(tm.models[0], conf.x);
  const double u = predict_uncertainty(tm.uncertainty, conf.x);
  const double q = tm.calib.q_hat;
  CHECK(h + q * u <= bench.outcome.range.hi + 1e-4);
  CHECK(h - q * u >= bench.outcome.range.lo - 1e-4);

  // Same trained model under the plain point constraint: a superset region,
  // so its optimum can only be cheaper.
  const InstanceRow point = solve_instance(bench, tm, Method::Micl, cfg, 0);
  REQUIRE(point.has_solution);
  CHECK(conf.objective >= point.objective - 1e-6);
}

TEST_CASE("undersized calibration sets surface as calibration-infeasible rows") {
  const Benchmark bench = make_benchmark(ProblemKind::Reactor);
  ExperimentConfig cfg = quick_config(ProblemKind::Reactor, Method::Cmicl);
  cfg.n_train = 20;   // 4 calibration rows
  cfg.alpha = 0.05;   // rank 5 of 4 -> infinite quantile
  const Dataset data =
      sample_benchmark_data(bench, cfg.n_train, derive_seed(cfg.seed, "data"), 0.5);
  const TrainedMethod tm = train_method(bench, data, cfg);
  CHECK(tm.calib.q_hat == kInf);

  const InstanceRow row = solve_instance(bench, tm, Method::Cmicl, cfg, 0);
  CHECK_FALSE(row.has_solution);
  CHECK(row.status == "calibration-infeasible");
}

TEST_CASE("vote solve meets the quorum among the member models") {
  const Benchmark bench = make_benchmark(ProblemKind::Reactor);
  ExperimentConfig cfg = quick_config(ProblemKind::Reactor, Method::Wmicl);
  cfg.alpha = 0.10;  // quorum = ceil(0.9 * 3) = 3 of 3
  const Dataset data =
      sample_benchmark_data(bench, cfg.n_train, derive_seed(cfg.seed, "data"), 0.5);
  const TrainedMethod tm = train_method(bench, data, cfg);

  const InstanceRow row = solve_instance(bench, tm, Method::Wmicl, cfg, 1);
  REQUIRE(row.has_solution);
  std::size_t inside = 0;
  for (const Predictor& p : tm.models) {
    const double v = predictor_value(p, row.x);
    if (v >= bench.outcome.range.lo - 1e-4 && v <= bench.outcome.range.hi + 1e-4) {
      ++inside;
    }
  }
  CHECK(inside >= vote_threshold(tm.models.size(), cfg.alpha));
}

TEST_CASE("classification solves keep the chosen logits in the desired set") {
  const Benchmark bench = make_benchmark(ProblemKind::Basket);
  ExperimentConfig cfg = quick_config(ProblemKind::Basket, Method::Micl);
  cfg.n_train = 300;
  cfg.train.mlp.hidden = {6};
  cfg.train.mlp.epochs = 250;
  const Dataset data =
      sample_benchmark_data(bench, cfg.n_train, derive_seed(cfg.seed, "data"), 0.0);

  SECTION("point protocol: the argmax class is desired") {
    const TrainedMethod tm = train_method(bench, data, cfg);
    const InstanceRow row = solve_instance(bench, tm, Method::Micl, cfg, 0);
    REQUIRE(row.has_solution);
    const int chosen = predict_class(std::get<Mlp>(tm.models[0]), row.x);
    CHECK(bench.outcome.contains_class(chosen));
    CHECK(row.predictor_value == static_cast<double>(chosen));
  }

  SECTION("conformal protocol: the conformal class set sits inside desired") {
    cfg.method = Method::Cmicl;
    const TrainedMethod tm = train_method(bench, data, cfg);
    const InstanceRow row = solve_instance(bench, tm, Method::Cmicl, cfg, 0);
    REQUIRE(row.has_solution);
    const std::vector<double> logits =
        predict_mlp(std::get<Mlp>(tm.models[0]), row.x);
    bool any_desired_in_set = false;
    for (std::size_t k = 0; k < logits.size(); ++k) {
      const bool in_set = -logits[k] <= tm.calib.q_hat + 1e-4;
      if (bench.outcome.contains_class(static_cast<int>(k))) {
        any_desired_in_set = any_desired_in_set || in_set;
      } else {
        CHECK(-logits[k] > tm.calib.q_hat - 1e-4);  // pinned out of the set
      }
    }
    CHECK(any_desired_in_set);
  }
}

TEST_CASE("experiment batches are deterministic across thread counts") {
  const Benchmark bench = make_benchmark(ProblemKind::Reactor);
  ExperimentConfig cfg = quick_config(ProblemKind::Reactor, Method::Micl);
  cfg.n_instances = 3;
  const Dataset data =
      sample_benchmark_data(bench, cfg.n_train, derive_seed(cfg.seed, "data"), 0.5);
  const TrainedMethod tm = train_method(bench, data, cfg);

  cfg.jobs = 1;
  const std::vector<InstanceRow> serial = run_experiment(bench, tm, cfg);
  cfg.jobs = 3;
  const std::vector<InstanceRow> parallel = run_experiment(bench, tm, cfg);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].instance_id == i);
    CHECK(serial[i].status == parallel[i].status);
    CHECK(serial[i].objective == parallel[i].objective);
    CHECK(serial[i].x == parallel[i].x);
    CHECK(serial[i].oracle_feasible == parallel[i].oracle_feasible);
  }
  // Different instances face different cost vectors, so objectives differ.
  CHECK(serial[0].objective != serial[1].objective);
}

TEST_CASE("report CSV round-trips, including unsolved rows") {
  std::vector<InstanceRow> rows(3);
  rows[0].instance_id = 0;
  rows[0].method = "cmicl";
  rows[0].alpha = 0.1;
  rows[0].status = "optimal";
  rows[0].has_solution = true;
  rows[0].objective = 1234.5678;
  rows[0].bound = 1230.0;
  rows[0].gap = 0.0037;
  rows[0].solve_seconds = 0.25;
  rows[0].oracle_feasible = 1;
  rows[0].predictor_value = 77.25;
  rows[1].instance_id = 1;
  rows[1].method = "cmicl";
  rows[1].alpha = 0.1;
  rows[1].status = "calibration-infeasible";
  rows[1].solve_seconds = 0.01;
  rows[2].instance_id = 2;
  rows[2].method = "micl";
  rows[2].alpha = 0.1;
  rows[2].status = "infeasible";
  rows[2].solve_seconds = 0.5;

  const std::string path = temp_path("comicl_report_roundtrip.csv");
  write_report_csv(rows, path);
  const std::vector<InstanceRow> back = read_report_csv(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].has_solution);
  CHECK(back[0].objective == rows[0].objective);
  CHECK(back[0].bound == rows[0].bound);
  CHECK(back[0].gap == rows[0].gap);
  CHECK(back[0].oracle_feasible == 1);
  CHECK(back[0].predictor_value == rows[0].predictor_value);
  CHECK_FALSE(back[1].has_solution);
  CHECK(back[1].status == "calibration-infeasible");
  CHECK(back[2].method == "micl");
  std::remove(path.c_str());

  CHECK_THROWS_WITH(read_report_csv(temp_path("comicl_missing_report.csv")),
                    Catch::Matchers::ContainsSubstring("cannot open"));
  const std::string bad = temp_path("comicl_bad_report.csv");
  {
    std::ofstream out(bad);
    out << "nope\n";
  }
  CHECK_THROWS_WITH(read_report_csv(bad),
                    Catch::Matchers::ContainsSubstring("unexpected header"));
  std::remove(bad.c_str());
}

TEST_CASE("summary aggregation matches hand arithmetic") {
  std::vector<InstanceRow> rows;
  auto push = [&rows](std::size_t id, const char* method, bool solved,
                      double objective, int feasible, double seconds) {
    InstanceRow r;
    r.instance_id = id;
    r.method = method;
    r.alpha = 0.1;
    r.status = solved ? "optimal" : "infeasible";
    r.has_solution = solved;
    r.objective = objective;
    r.oracle_feasible = feasible;
    r.solve_seconds = seconds;
    rows.push_back(r);
  };
  push(0, "cmicl", true, 10.0, 1, 0.5);
  push(1, "cmicl", true, 20.0, 0, 0.5);
  push(0, "micl", true, 8.0, 1, 0.25);
  push(1, "micl", true, 18.0, 1, 0.25);
  push(2, "micl", false, 0.0, 0, 0.1);
  // A limit-terminated incumbent: counts for timing, not for rates or costs.
  {
    InstanceRow r;
    r.instance_id = 3;
    r.method = "micl";
    r.alpha = 0.1;
    r.status = "time-limit";
    r.has_solution = true;
    r.objective = 999.0;
    r.oracle_feasible = 0;
    r.solve_seconds = 2.0;
    rows.push_back(r);
  }

  const std::vector<MethodSummary> sums = summarize_report(rows);
  REQUIRE(sums.size() == 2);
  const MethodSummary& conf = sums[0].method == "cmicl" ? sums[0] : sums[1];
  const MethodSummary& point = sums[0].method == "micl" ? sums[0] : sums[1];

  CHECK(conf.n_rows == 2);
  CHECK(conf.n_solved == 2);
  CHECK(conf.n_feasible == 1);
  CHECK_THAT(conf.feasibility_rate, Catch::Matchers::WithinAbs(0.5, 1e-12));
  CHECK_THAT(conf.feasibility_sem,
             Catch::Matchers::WithinAbs(std::sqrt(0.25 / 2.0), 1e-12));
  CHECK_THAT(conf.objective_ci.center, Catch::Matchers::WithinAbs(15.0, 1e-12));
  CHECK_THAT(conf.total_seconds, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_FALSE(conf.has_delta);

  CHECK(point.n_rows == 4);
  CHECK(point.n_solved == 2);  // infeasible and time-limit rows excluded
  CHECK_THAT(point.feasibility_rate, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(point.total_seconds, Catch::Matchers::WithinAbs(2.6, 1e-12));
  CHECK_THAT(point.objective_ci.center, Catch::Matchers::WithinAbs(13.0, 1e-12));
  // Per-instance cost gap vs the conformal run: mean(-20%, -10%).
  REQUIRE(point.has_delta);
  CHECK_THAT(point.delta_vs_conformal_pct,
             Catch::Matchers::WithinAbs(-15.0, 1e-9));

  const std::string text = format_summary(rows);
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("cmicl"));
  CHECK_THAT(text, Catch::Matchers::ContainsSubstring("micl"));
}

TEST_CASE("coverage study returns sane per-seed and per-group numbers") {
  CoverageConfig cfg;
  cfg.problem = ProblemKind::Reactor;
  cfg.alpha = 0.1;
  cfg.mondrian = true;
  cfg.n_train = 150;
  cfg.n_cal = 80;
  cfg.n_test = 300;
  cfg.n_seeds = 2;
  cfg.mlp.hidden = {8};
  cfg.mlp.epochs = 200;
  cfg.uncertainty.hidden = {4};
  cfg.uncertainty.epochs = 150;

  const CoverageOutcome out = run_coverage(cfg);
  REQUIRE(out.per_seed.size() == 2);
  for (double c : out.per_seed) {
    CHECK(c >= 0.7);
    CHECK(c <= 1.0);
  }
  CHECK(out.mean_overall >= 0.7);
  REQUIRE(out.mean_by_group.count(0) == 1);
  REQUIRE(out.mean_by_group.count(1) == 1);
  for (const auto& [g, c] : out.mean_by_group) {
    CHECK(c >= 0.6);
    CHECK(c <= 1.0);
  }
  // Regression strata are deciles of y: all ten present for 300 test points.
  REQUIRE(out.mean_by_stratum.size() == 10);
  CHECK(out.mean_by_stratum.begin()->first == 0);
  CHECK(out.mean_by_stratum.rbegin()->first == 9);
  for (const auto& [stratum, c] : out.mean_by_stratum) {
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("classification coverage strata are the class labels") {
  CoverageConfig cfg;
  cfg.problem = ProblemKind::Basket;
  cfg.alpha = 0.2;
  cfg.n_train = 200;
  cfg.n_cal = 100;
  cfg.n_test = 300;
  cfg.n_seeds = 1;
  cfg.mlp.hidden = {8};
  cfg.mlp.epochs = 200;

  const CoverageOutcome out = run_coverage(cfg);
  REQUIRE(!out.mean_by_stratum.empty());
  for (const auto& [stratum, c] : out.mean_by_stratum) {
    CHECK(stratum >= 0);
    CHECK(stratum <= 3);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
  }
  CHECK(out.mean_overall >= 0.6);
}
