// End-to-end checks of the command-line driver: artifact plumbing across the
// gen-data/train/calibrate/solve/experiment/report pipeline, exit-code
// contracts, determinism, and flag overrides.  Each case works in its own
// scratch directory with absolute paths, so the binary's cwd never matters.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "catch2/catch_amalgamated.hpp"
#include "comicl/experiment.hpp"

using namespace comicl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh scratch directory per test case.
fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("comicl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with `args`, capturing stdout/stderr; returns the exit code.
int run_cli(const std::string& args, const fs::path& dir,
            std::string* out = nullptr, std::string* err = nullptr,
            const std::string& env_prefix = "") {
  const fs::path out_p = dir / "stdout.txt";
  const fs::path err_p = dir / "stderr.txt";
  const std::string cmd = env_prefix + COMICL_CLI_PATH + " " + args + " >" +
                          out_p.string() + " 2>" + err_p.string();
  const int rc = std::system(cmd.c_str());
  if (out) *out = slurp(out_p);
  if (err) *err = slurp(err_p);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

// A small regression run: big enough to calibrate at alpha=0.1, small enough
// that the whole pipeline finishes in a couple of seconds.
json base_config(const fs::path& dir) {
  return json{
      {"seed", 5},
      {"problem", {{"kind", "reactor"}}},
      {"data",
       {{"path", (dir / "data.csv").string()},
        {"n_rows", 120},
        {"noise_sigma", 0.5}}},
      {"model",
       {{"family", "mlp"},
        {"path", (dir / "model.json").string()},
        {"uncertainty_path", (dir / "unc.json").string()},
        {"hidden", {4}},
        {"epochs", 120},
        {"learning_rate", 0.1},
        {"uncertainty_hidden", {3}},
        {"uncertainty_epochs", 80}}},
      {"conformal",
       {{"alpha", 0.1},
        {"train_fraction", 0.8},
        {"path", (dir / "calib.json").string()}}},
      {"solver", {{"rel_gap", 0.05}}},
      {"experiment",
       {{"method", "cmicl"},
        {"n_instances", 2},
        {"report_path", (dir / "report.csv").string()}}}};
}

fs::path write_config(const fs::path& dir, const json& j,
                      const std::string& name = "run.json") {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  return p;
}

}  // namespace

TEST_CASE("cli pipeline writes every artifact and a re-parsable report") {
  const fs::path dir = scratch_dir("pipeline");
  const fs::path cfg = write_config(dir, base_config(dir));
  const std::string c = "--config " + cfg.string();
  std::string out, err;

  REQUIRE(run_cli("gen-data " + c, dir, &out, &err) == 0);
  CHECK(out.find("120 rows") != std::string::npos);
  CHECK(fs::exists(dir / "data.csv"));
  CHECK(fs::exists(dir / "data.csv.oracle.json"));
  CHECK(fs::exists(dir / "data.csv.manifest.json"));

  // cmicl regression trains a predictor and an uncertainty model.
  REQUIRE(run_cli("train " + c, dir, &out, &err) == 0);
  CHECK(fs::exists(dir / "model.json"));
  CHECK(fs::exists(dir / "unc.json"));

  REQUIRE(run_cli("calibrate " + c, dir, &out, &err) == 0);
  CHECK(out.find("calibrated on 24 scores") != std::string::npos);
  CHECK(out.find("quantile = ") != std::string::npos);
  CHECK(fs::exists(dir / "calib.json"));

  const fs::path lp = dir / "inst.lp";
  REQUIRE(run_cli("solve " + c + " --emit-lp " + lp.string(), dir, &out, &err) ==
          0);
  CHECK(out.find("status: ") != std::string::npos);
  const std::string lp_text = slurp(lp);
  CHECK(lp_text.find("Minimize") != std::string::npos);
  CHECK(lp_text.find("Subject To") != std::string::npos);

  REQUIRE(run_cli("experiment " + c, dir, &out, &err) == 0);
  const std::vector<InstanceRow> rows =
      read_report_csv((dir / "report.csv").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == "cmicl");

  // The manifest references only artifacts that exist.
  const json manifest = json::parse(slurp(dir / "report.csv.manifest.json"));
  for (const auto& a : manifest.at("artifacts")) {
    CHECK(fs::exists(fs::path(a.get<std::string>())));
  }

  // `report` re-prints exactly the summary `experiment` derived from the CSV.
  std::string rep_out;
  REQUIRE(run_cli("report " + c, dir, &rep_out, &err) == 0);
  const std::string exp_summary = out.substr(out.find('\n') + 1);
  CHECK(rep_out == exp_summary);
}

TEST_CASE("cli gen-data is byte-deterministic and honors --seed") {
  const fs::path dir = scratch_dir("gendata");
  const fs::path cfg = write_config(dir, base_config(dir));
  const std::string c = "--config " + cfg.string();

  REQUIRE(run_cli("gen-data " + c, dir) == 0);
  const std::string first = slurp(dir / "data.csv");
  REQUIRE(run_cli("gen-data " + c, dir) == 0);
  CHECK(slurp(dir / "data.csv") == first);

  REQUIRE(run_cli("gen-data " + c + " --seed 99", dir) == 0);
  CHECK(slurp(dir / "data.csv") != first);
}

TEST_CASE("cli rejects unknown config keys with the dotted path") {
  const fs::path dir = scratch_dir("badkey");
  json j = base_config(dir);
  j["conformal"]["alfa"] = 0.1;
  const fs::path cfg = write_config(dir, j);
  std::string out, err;
  CHECK(run_cli("gen-data --config " + cfg.string(), dir, &out, &err) == 1);
  CHECK(err.find("conformal.alfa") != std::string::npos);
}

TEST_CASE("cli solve exits 2 when calibration cannot reach the coverage") {
  const fs::path dir = scratch_dir("calinf");
  json j = base_config(dir);
  j["data"]["n_rows"] = 30;           // 6 calibration scores
  j["conformal"]["alpha"] = 0.02;     // needs rank 7 of 6 -> infinite quantile
  const fs::path cfg = write_config(dir, j);
  const std::string c = "--config " + cfg.string();
  std::string out, err;

  REQUIRE(run_cli("gen-data " + c, dir) == 0);
  REQUIRE(run_cli("train " + c, dir) == 0);
  REQUIRE(run_cli("calibrate " + c, dir, &out, &err) == 0);
  CHECK(out.find("calibration-infeasible") != std::string::npos);
  CHECK(run_cli("solve " + c, dir, &out, &err) == 2);
  CHECK(err.find("calibration-infeasible") != std::string::npos);
}

TEST_CASE("cli wmicl training writes one model file per ensemble member") {
  const fs::path dir = scratch_dir("wmicl");
  json j = base_config(dir);
  j["experiment"]["method"] = "wmicl";
  j["experiment"]["ensemble_size"] = 5;
  const fs::path cfg = write_config(dir, j);
  const std::string c = "--config " + cfg.string();

  REQUIRE(run_cli("gen-data " + c, dir) == 0);
  REQUIRE(run_cli("train " + c, dir) == 0);
  for (int p = 0; p < 5; ++p) {
    CHECK(fs::exists(dir / ("model_p" + std::to_string(p) + ".json")));
  }
  CHECK_FALSE(fs::exists(dir / "model.json"));

  std::string out;
  REQUIRE(run_cli("solve " + c, dir, &out) == 0);
  CHECK(out.find("status: ") != std::string::npos);
}

TEST_CASE("cli experiment rows are identical across worker counts") {
  const fs::path dir = scratch_dir("jobs");
  json j = base_config(dir);
  j["experiment"]["n_instances"] = 3;
  const fs::path cfg = write_config(dir, j);
  const std::string c = "--config " + cfg.string();

  REQUIRE(run_cli("experiment " + c + " --jobs 1", dir) == 0);
  const std::vector<InstanceRow> seq =
      read_report_csv((dir / "report.csv").string());
  REQUIRE(run_cli("experiment " + c + " --jobs 3", dir) == 0);
  const std::vector<InstanceRow> par =
      read_report_csv((dir / "report.csv").string());

  REQUIRE(seq.size() == par.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    CHECK(seq[i].instance_id == par[i].instance_id);
    CHECK(seq[i].status == par[i].status);
    CHECK(seq[i].objective == par[i].objective);   // wall times may differ
    CHECK(seq[i].bound == par[i].bound);
    CHECK(seq[i].oracle_feasible == par[i].oracle_feasible);
    CHECK(seq[i].predictor_value == par[i].predictor_value);
  }
}

TEST_CASE("cli report on a missing csv fails with the path") {
  const fs::path dir = scratch_dir("norep");
  const fs::path cfg = write_config(dir, base_config(dir));
  std::string out, err;
  CHECK(run_cli("report --config " + cfg.string(), dir, &out, &err) == 1);
  CHECK(err.find("report.csv") != std::string::npos);
}

TEST_CASE("cli logging is quiet by default and verbose under COMICL_LOG") {
  const fs::path dir = scratch_dir("logs");
  json j = base_config(dir);
  j["experiment"]["n_instances"] = 1;
  const fs::path cfg = write_config(dir, j);
  const std::string c = "--config " + cfg.string();
  std::string out, err;

  REQUIRE(run_cli("experiment " + c, dir, &out, &err) == 0);
  CHECK(err.empty());
  REQUIRE(run_cli("experiment " + c, dir, &out, &err, "COMICL_LOG=1 ") == 0);
  CHECK_FALSE(err.empty());
}

TEST_CASE("cli usage errors come from the parser, not a crash") {
  const fs::path dir = scratch_dir("usage");
  std::string out, err;
  CHECK(run_cli("solve", dir, &out, &err) != 0);              // missing --config
  CHECK(run_cli("frobnicate --config x", dir, &out, &err) != 0);
  CHECK(run_cli("solve --config " + (dir / "absent.json").string(), dir, &out,
                &err) == 1);
  CHECK(err.find("absent.json") != std::string::npos);
}
