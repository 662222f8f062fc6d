// comicl: train predictive models, calibrate conformal sets, compile learned
// constraints into mixed-integer programs, and run batch experiments.
//
// Subcommands: gen-data, train, calibrate, solve, experiment, report.
// Every run is driven by one JSON config file (strictly parsed) and one root
// seed; artifacts land where the config points.  Exit codes: 0 success,
// 1 error, 2 calibration-infeasible.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "comicl/config.hpp"
#include "comicl/experiment.hpp"
#include "comicl/model_io.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

bool log_enabled() {
  const char* v = std::getenv("COMICL_LOG");
  return v != nullptr && *v != '\0' && std::string(v) != "0";
}

std::ostream* log_stream() { return log_enabled() ? &std::cerr : nullptr; }

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  comicl::require(in.good(), "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return comicl::detail::format(
      "%016llx", static_cast<unsigned long long>(comicl::fnv1a64(ss.str())));
}

std::string iso_timestamp_utc() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Records what a command produced.  Written next to the first artifact; all
// listed artifacts must already exist.
void write_manifest(const std::string& command, const std::string& config_path,
                    const std::vector<std::string>& artifacts) {
  for (const std::string& a : artifacts) {
    comicl::require(std::filesystem::exists(a),
                    "manifest: artifact '" + a + "' was not written");
  }
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["config_path"] = config_path;
  j["config_hash"] = file_hash_hex(config_path);
  j["timestamp_utc"] = iso_timestamp_utc();
  j["artifacts"] = artifacts;
  const std::string path = artifacts.front() + ".manifest.json";
  std::ofstream out(path);
  comicl::require(out.good(), "cannot write manifest '" + path + "'");
  out << j.dump(2) << "\n";
}

// model.json -> model_p3.json for ensemble members.
std::string indexed_path(const std::string& base, std::size_t i) {
  const std::string suffix = "_p" + std::to_string(i);
  const auto dot = base.rfind('.');
  const auto slash = base.find_last_of("/\\");
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash)) {
    return base + suffix;
  }
  return base.substr(0, dot) + suffix + base.substr(dot);
}

nlohmann::json outcome_descriptor(const comicl::Benchmark& bench) {
  nlohmann::json j;
  if (bench.outcome.task == comicl::TaskKind::Regression) {
    j["range"] = {bench.outcome.range.lo, bench.outcome.range.hi};
  } else {
    j["desired_classes"] = bench.outcome.desired;
    j["n_classes"] = bench.outcome.n_classes;
  }
  return j;
}

comicl::Dataset load_dataset(const comicl::RunConfig& cfg,
                             const comicl::Benchmark& bench) {
  return comicl::load_csv(cfg.data_path, bench.outcome.task);
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const comicl::RunConfig& cfg, const std::string& config_path) {
  const comicl::Benchmark bench = comicl::make_benchmark(cfg.problem);
  const comicl::Dataset data = comicl::sample_benchmark_data(
      bench, cfg.n_rows, comicl::derive_seed(cfg.seed, "data"), cfg.noise_sigma);
  comicl::save_csv(data, cfg.data_path);

  nlohmann::json desc;
  desc["format"] = "comicl-oracle/1";
  desc["problem"] = comicl::problem_kind_text(cfg.problem);
  desc["task"] = bench.outcome.task == comicl::TaskKind::Regression
                     ? "regression"
                     : "classification";
  desc["n_features"] = bench.n_features;
  desc["n_rows"] = cfg.n_rows;
  desc["noise_sigma"] = cfg.noise_sigma;
  desc["seed"] = cfg.seed;
  desc["outcome"] = outcome_descriptor(bench);
  const std::string desc_path = cfg.data_path + ".oracle.json";
  std::ofstream out(desc_path);
  comicl::require(out.good(), "cannot write oracle descriptor '" + desc_path + "'");
  out << desc.dump(2) << "\n";
  out.close();

  write_manifest("gen-data", config_path, {cfg.data_path, desc_path});
  std::cout << "wrote " << data.n_rows << " rows x " << data.n_features
            << " features to " << cfg.data_path << "\n";
  return 0;
}

int cmd_train(const comicl::RunConfig& cfg, const std::string& config_path) {
  const comicl::Benchmark bench = comicl::make_benchmark(cfg.problem);
  const comicl::Dataset data = load_dataset(cfg, bench);
  const comicl::TrainedMethod trained =
      comicl::train_method(bench, data, cfg.experiment_config());

  std::vector<std::string> artifacts;
  if (cfg.method == comicl::Method::Wmicl) {
    for (std::size_t p = 0; p < trained.models.size(); ++p) {
      const std::string path = indexed_path(cfg.model_path, p);
      comicl::save_predictor(trained.models[p], path);
      artifacts.push_back(path);
    }
  } else {
    comicl::save_predictor(trained.models[0], cfg.model_path);
    artifacts.push_back(cfg.model_path);
    if (trained.has_uncertainty) {
      comicl::save_uncertainty(trained.uncertainty, cfg.uncertainty_path);
      artifacts.push_back(cfg.uncertainty_path);
    }
  }
  write_manifest("train", config_path, artifacts);
  for (const std::string& a : artifacts) std::cout << "wrote " << a << "\n";
  return 0;
}

int cmd_calibrate(const comicl::RunConfig& cfg, const std::string& config_path) {
  comicl::require(cfg.method == comicl::Method::Cmicl,
                  "config: experiment.method must be cmicl to calibrate");
  const comicl::Benchmark bench = comicl::make_benchmark(cfg.problem);
  const comicl::Dataset data = load_dataset(cfg, bench);
  const comicl::Predictor model = comicl::load_predictor(cfg.model_path);

  // Same deterministic split the trainer used: scores come from rows the
  // model never saw.
  const comicl::DataSplit split = comicl::split_dataset(
      data, cfg.train_fraction, comicl::derive_seed(cfg.seed, "split"));
  std::vector<double> scores;
  std::vector<int> groups;
  scores.reserve(split.calib.size());
  comicl::ScoreKind kind;
  if (bench.outcome.task == comicl::TaskKind::Regression) {
    kind = comicl::ScoreKind::NormalizedResidual;
    const comicl::UncertaintyModel unc =
        comicl::load_uncertainty(cfg.uncertainty_path);
    for (std::size_t r : split.calib) {
      const double pred = comicl::predictor_value(model, data.row(r));
      const double u = comicl::predict_uncertainty(unc, data.row(r));
      scores.push_back(comicl::score_regression(pred, u, data.targets[r]));
      groups.push_back(bench.outcome.contains_value(data.targets[r]) ? 1 : 0);
    }
  } else {
    kind = comicl::ScoreKind::NegativeTrueLogit;
    const comicl::Mlp& net = std::get<comicl::Mlp>(model);
    for (std::size_t r : split.calib) {
      scores.push_back(comicl::score_classification(
          comicl::predict_mlp(net, data.row(r)), data.label(r)));
      groups.push_back(bench.outcome.contains_class(data.label(r)) ? 1 : 0);
    }
  }
  const comicl::Calibration calib =
      cfg.mondrian
          ? comicl::calibrate_mondrian(scores, groups, cfg.alpha, kind)
          : comicl::calibrate(scores, cfg.alpha, kind);
  comicl::save_calibration(calib, cfg.calibration_path);
  write_manifest("calibrate", config_path, {cfg.calibration_path});

  std::cout << "calibrated on " << calib.n_total << " scores at alpha "
            << cfg.alpha << "\n";
  auto print_q = [](const std::string& label, double q) {
    if (std::isfinite(q)) {
      std::cout << label << " = " << q << "\n";
    } else {
      std::cout << label
                << " = inf (calibration-infeasible at this alpha)\n";
    }
  };
  if (calib.mondrian) {
    for (const comicl::GroupQuantile& g : calib.groups) {
      print_q("quantile[group " + std::to_string(g.group) + "]", g.q_hat);
    }
  } else {
    print_q("quantile", calib.q_hat);
  }
  return 0;
}

// Rebuilds the trained-method bundle from serialized artifacts.
comicl::TrainedMethod load_trained(const comicl::RunConfig& cfg,
                                   const comicl::Benchmark& bench) {
  comicl::TrainedMethod tm;
  tm.method = cfg.method;
  tm.task = bench.outcome.task;
  switch (cfg.method) {
    case comicl::Method::Micl:
      tm.models.push_back(comicl::load_predictor(cfg.model_path));
      break;
    case comicl::Method::Wmicl:
      for (std::size_t p = 0; p < cfg.ensemble_size; ++p) {
        tm.models.push_back(
            comicl::load_predictor(indexed_path(cfg.model_path, p)));
      }
      break;
    case comicl::Method::Cmicl:
      tm.models.push_back(comicl::load_predictor(cfg.model_path));
      tm.calib = comicl::load_calibration(cfg.calibration_path);
      if (bench.outcome.task == comicl::TaskKind::Regression) {
        tm.uncertainty = comicl::load_uncertainty(cfg.uncertainty_path);
        tm.has_uncertainty = true;
      }
      break;
  }
  return tm;
}

int cmd_solve(const comicl::RunConfig& cfg, const std::string& config_path,
              const std::string& emit_lp_path) {
  const comicl::Benchmark bench = comicl::make_benchmark(cfg.problem);
  const comicl::TrainedMethod trained = load_trained(cfg, bench);
  const comicl::ExperimentConfig ecfg = cfg.experiment_config();

  // The solve command runs instance 0 of the configured cost stream.
  if (!emit_lp_path.empty()) {
    comicl::MipModel model;
    comicl::build_instance_mip(model, bench, trained, cfg.method, ecfg, 0);
    std::ofstream out(emit_lp_path);
    comicl::require(out.good(), "cannot write LP file '" + emit_lp_path + "'");
    out << model.emit_lp_text();
    std::cout << "wrote " << emit_lp_path << "\n";
  }

  const comicl::InstanceRow row =
      comicl::solve_instance(bench, trained, cfg.method, ecfg, 0, log_stream());
  if (row.status == "calibration-infeasible") {
    std::cerr << "calibration-infeasible: the conformal quantile is infinite; "
                 "enlarge the calibration set or raise alpha\n";
    return 2;
  }
  std::cout << "status: " << row.status << "\n";
  if (row.has_solution) {
    std::cout << "objective: " << row.objective << "\n"
              << "bound: " << row.bound << "\n"
              << "gap: " << row.gap << "\n";
    std::cout << "solution:";
    for (double v : row.x) std::cout << " " << v;
    std::cout << "\n";
    std::cout << "predictor_value: " << row.predictor_value << "\n"
              << "oracle_feasible: " << row.oracle_feasible << "\n";
  }
  std::cout << "solve_seconds: " << row.solve_seconds << "\n";
  if (!emit_lp_path.empty()) {
    write_manifest("solve", config_path, {emit_lp_path});
  }
  return row.has_solution || row.status == "infeasible" ? 0 : 1;
}

int cmd_experiment(const comicl::RunConfig& cfg, const std::string& config_path,
                   std::optional<std::size_t> jobs_override) {
  comicl::ExperimentConfig ecfg = cfg.experiment_config();
  if (jobs_override) ecfg.jobs = *jobs_override;

  const comicl::Benchmark bench = comicl::make_benchmark(cfg.problem);
  comicl::Dataset data;
  if (std::filesystem::exists(cfg.data_path)) {
    data = load_dataset(cfg, bench);
    if (log_enabled()) {
      std::cerr << "using dataset " << cfg.data_path << " (" << data.n_rows
                << " rows)\n";
    }
  } else {
    data = comicl::sample_benchmark_data(bench, cfg.n_rows,
                                         comicl::derive_seed(cfg.seed, "data"),
                                         cfg.noise_sigma);
    if (log_enabled()) {
      std::cerr << "sampled " << data.n_rows << " training rows in memory\n";
    }
  }

  const comicl::TrainedMethod trained = comicl::train_method(bench, data, ecfg);
  const std::vector<comicl::InstanceRow> rows =
      comicl::run_experiment(bench, trained, ecfg, log_stream());
  comicl::write_report_csv(rows, cfg.report_path);
  write_manifest("experiment", config_path, {cfg.report_path});

  // The printed summary is always computed from the CSV just written, so the
  // file and the table can never drift apart.
  const std::vector<comicl::InstanceRow> reread =
      comicl::read_report_csv(cfg.report_path);
  std::cout << "wrote " << cfg.report_path << " (" << reread.size()
            << " rows)\n";
  std::cout << comicl::format_summary(reread);

  const bool all_infeasible_calibration =
      !reread.empty() &&
      std::all_of(reread.begin(), reread.end(), [](const comicl::InstanceRow& r) {
        return r.status == "calibration-infeasible";
      });
  if (all_infeasible_calibration) {
    std::cerr << "calibration-infeasible: every instance was skipped; "
                 "enlarge the calibration set or raise alpha\n";
    return 2;
  }
  return 0;
}

int cmd_report(const comicl::RunConfig& cfg) {
  const std::vector<comicl::InstanceRow> rows =
      comicl::read_report_csv(cfg.report_path);
  std::cout << comicl::format_summary(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned-constraint optimization pipeline"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  std::size_t jobs_flag = 0;
  bool jobs_given = false;
  std::string emit_lp_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")
        ->required();
    sub->add_option("--seed", seed_override, "override the config's root seed")
        ->each([&seed_given](const std::string&) { seed_given = true; });
  };

  CLI::App* gen = app.add_subcommand("gen-data", "sample a benchmark dataset");
  add_common(gen);
  CLI::App* train = app.add_subcommand("train", "fit the configured models");
  add_common(train);
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "compute conformal quantiles");
  add_common(calibrate);
  CLI::App* solve = app.add_subcommand("solve", "compile and solve one instance");
  add_common(solve);
  solve->add_option("--emit-lp", emit_lp_path, "dump the instance MIP as LP text");
  CLI::App* experiment =
      app.add_subcommand("experiment", "run the full instance batch");
  add_common(experiment);
  experiment->add_option("--jobs", jobs_flag, "parallel solve workers")
      ->each([&jobs_given](const std::string&) { jobs_given = true; });
  CLI::App* report = app.add_subcommand("report", "summarize an existing report");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    comicl::RunConfig cfg = comicl::load_config(config_path);
    if (seed_given) cfg.seed = seed_override;
    if (*gen) return cmd_gen_data(cfg, config_path);
    if (*train) return cmd_train(cfg, config_path);
    if (*calibrate) return cmd_calibrate(cfg, config_path);
    if (*solve) return cmd_solve(cfg, config_path, emit_lp_path);
    if (*experiment) {
      return cmd_experiment(cfg, config_path,
                            jobs_given ? std::optional<std::size_t>(jobs_flag)
                                       : std::nullopt);
    }
    if (*report) return cmd_report(cfg);
    std::cerr << "comicl: no subcommand\n";
    return 1;
  } catch (const comicl::CalibrationInfeasibleError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "comicl: error: " << e.what() << "\n";
    return 1;
  }
}
