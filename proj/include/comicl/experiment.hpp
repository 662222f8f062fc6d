#pragma once

// Experiment orchestration: trains predictors under one of three
// outcome-constraint protocols, compiles and solves a batch of cost
// instances, and reports per-instance rows plus aggregate summaries.
//
// Protocols:
//   point      — the trained prediction itself must land in the outcome set.
//   vote       — an ensemble of bootstrap models; at least ceil((1-alpha)P)
//                of them must individually land in the outcome set.
//   conformal  — a split-calibrated conformal set must be contained in the
//                outcome set, which yields the 1-alpha ground-truth
//                feasibility guarantee the harness verifies empirically.
//
// Method names in reports use the shorthand micl / wmicl / cmicl.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "comicl/branch_and_bound.hpp"
#include "comicl/conformal.hpp"
#include "comicl/data.hpp"
#include "comicl/encode.hpp"
#include "comicl/mlp.hpp"
#include "comicl/predictor.hpp"
#include "comicl/problems.hpp"
#include "comicl/stats.hpp"
#include "comicl/tree.hpp"

namespace comicl {

enum class Method { Micl, Wmicl, Cmicl };

inline const char* method_text(Method m) {
  switch (m) {
    case Method::Micl: return "micl";
    case Method::Wmicl: return "wmicl";
    case Method::Cmicl: return "cmicl";
  }
  throw Error("bad method");
}

inline Method method_from_text(const std::string& s) {
  if (s == "micl") return Method::Micl;
  if (s == "wmicl") return Method::Wmicl;
  if (s == "cmicl") return Method::Cmicl;
  throw Error("unknown method '" + s + "'");
}

enum class ModelFamily { Mlp, Cart, Forest, Gbt, Lmdt };

inline const char* family_text(ModelFamily f) {
  switch (f) {
    case ModelFamily::Mlp: return "mlp";
    case ModelFamily::Cart: return "cart";
    case ModelFamily::Forest: return "rf";
    case ModelFamily::Gbt: return "gbt";
    case ModelFamily::Lmdt: return "lmdt";
  }
  throw Error("bad model family");
}

inline ModelFamily family_from_text(const std::string& s) {
  if (s == "mlp") return ModelFamily::Mlp;
  if (s == "cart") return ModelFamily::Cart;
  if (s == "rf") return ModelFamily::Forest;
  if (s == "gbt") return ModelFamily::Gbt;
  if (s == "lmdt") return ModelFamily::Lmdt;
  throw Error("unknown model family '" + s + "'");
}

struct TrainSettings {
  MlpTrainConfig mlp;          // base network
  MlpTrainConfig uncertainty;  // residual-scale network (conformal regression)
  CartConfig cart;
  ForestConfig forest;
  GbtConfig gbt;
  LmdtConfig lmdt;

  TrainSettings() {
    uncertainty.hidden = {8};
    uncertainty.epochs = 400;
  }
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Reactor;
  Method method = Method::Cmicl;
  ModelFamily family = ModelFamily::Mlp;
  double alpha = 0.1;
  bool mondrian = false;
  std::size_t n_train = 1000;
  double noise_sigma = 0.5;       // reactor target noise
  std::size_t n_instances = 100;
  std::uint64_t seed = 1;
  double rel_gap = 0.01;
  double time_limit_s = -1.0;
  std::size_t jobs = 1;
  std::size_t ensemble_size = 10;  // vote protocol: P
  double train_fraction = 0.8;     // conformal protocol: train/calibration cut
  TrainSettings train;
};

// Number of ensemble members that must land in the outcome set.
inline std::size_t vote_threshold(std::size_t p, double alpha) {
  require(p >= 1, "vote_threshold: empty ensemble");
  require(alpha > 0.0 && alpha < 1.0, "vote_threshold: alpha must be in (0,1)");
  const auto k = static_cast<std::size_t>(
      std::ceil((1.0 - alpha) * static_cast<double>(p) - 1e-9));
  return std::max<std::size_t>(k, 1);
}

// ---------------------------------------------------------------------------
// Training

struct TrainedMethod {
  Method method = Method::Cmicl;
  TaskKind task = TaskKind::Regression;
  std::vector<Predictor> models;   // one model, or P bootstrap models (vote)
  UncertaintyModel uncertainty;    // conformal regression only
  bool has_uncertainty = false;
  Calibration calib;               // conformal only
  double max_abs_cal_logit = 0.0;  // conformal classification big-M scale
};

namespace detail {

inline Predictor fit_family(const Dataset& data, std::span<const std::size_t> rows,
                            ModelFamily family, const TrainSettings& settings,
                            std::uint64_t seed) {
  switch (family) {
    case ModelFamily::Mlp: {
      MlpTrainConfig cfg = settings.mlp;
      cfg.seed = seed;
      return Predictor{train_mlp(data, rows, cfg)};
    }
    case ModelFamily::Cart:
      return Predictor{fit_cart(data, rows, settings.cart)};
    case ModelFamily::Forest: {
      ForestConfig cfg = settings.forest;
      cfg.seed = seed;
      return Predictor{fit_forest(data, rows, cfg)};
    }
    case ModelFamily::Gbt:
      return Predictor{fit_gbt(data, rows, settings.gbt)};
    case ModelFamily::Lmdt:
      return Predictor{fit_lmdt(data, rows, settings.lmdt)};
  }
  throw Error("bad model family");
}

inline int outcome_group(const Benchmark& b, double target) {
  if (b.outcome.task == TaskKind::Regression) {
    return b.outcome.contains_value(target) ? 1 : 0;
  }
  return b.outcome.contains_class(static_cast<int>(target)) ? 1 : 0;
}

}  // namespace detail

inline TrainedMethod train_method(const Benchmark& benchmark, const Dataset& data,
                                  const ExperimentConfig& cfg) {
  require(data.task == benchmark.outcome.task, "train_method: task mismatch");
  if (data.task == TaskKind::Classification) {
    require(cfg.family == ModelFamily::Mlp,
            "train_method: classification outcomes need the mlp family");
  }
  TrainedMethod tm;
  tm.method = cfg.method;
  tm.task = data.task;

  const std::vector<std::size_t> everything = data.all_rows();
  switch (cfg.method) {
    case Method::Micl: {
      tm.models.push_back(detail::fit_family(data, everything, cfg.family,
                                             cfg.train,
                                             derive_seed(cfg.seed, "net")));
      break;
    }
    case Method::Wmicl: {
      require(cfg.ensemble_size >= 1, "train_method: empty vote ensemble");
      const std::size_t half = std::max<std::size_t>(1, data.n_rows / 2);
      for (std::size_t p = 0; p < cfg.ensemble_size; ++p) {
        Rng rng(derive_seed(cfg.seed, "bootstrap", p));
        std::vector<std::size_t> sample(half);
        for (auto& r : sample) r = rng.index(data.n_rows);
        tm.models.push_back(detail::fit_family(data, sample, cfg.family,
                                               cfg.train,
                                               derive_seed(cfg.seed, "boot-net", p)));
      }
      break;
    }
    case Method::Cmicl: {
      const DataSplit split =
          split_dataset(data, cfg.train_fraction, derive_seed(cfg.seed, "split"));
      tm.models.push_back(detail::fit_family(data, split.train, cfg.family,
                                             cfg.train,
                                             derive_seed(cfg.seed, "net")));
      std::vector<double> scores;
      std::vector<int> groups;
      scores.reserve(split.calib.size());
      if (data.task == TaskKind::Regression) {
        MlpTrainConfig ucfg = cfg.train.uncertainty;
        ucfg.seed = derive_seed(cfg.seed, "uncertainty");
        if (predictor_is_mlp(tm.models[0])) {
          tm.uncertainty = fit_uncertainty(std::get<Mlp>(tm.models[0]), data,
                                           split.train, ucfg);
        } else {
          // Tree predictors: train the scale net on their residuals directly.
          std::vector<double> resid;
          resid.reserve(split.train.size());
          for (std::size_t r : split.train) {
            resid.push_back(std::fabs(
                predictor_value(tm.models[0], data.row(r)) - data.targets[r]));
          }
          UncertaintyModel u;
          u.net = comicl::detail::train_mlp_core(data, split.train, resid,
                                                 TaskKind::Regression, 1, ucfg,
                                                 nullptr);
          tm.uncertainty = std::move(u);
        }
        tm.has_uncertainty = true;
        for (std::size_t r : split.calib) {
          const double pred = predictor_value(tm.models[0], data.row(r));
          const double unc = predict_uncertainty(tm.uncertainty, data.row(r));
          scores.push_back(score_regression(pred, unc, data.targets[r]));
          groups.push_back(detail::outcome_group(benchmark, data.targets[r]));
        }
        tm.calib = cfg.mondrian
                       ? calibrate_mondrian(scores, groups, cfg.alpha,
                                            ScoreKind::NormalizedResidual)
                       : calibrate(scores, cfg.alpha, ScoreKind::NormalizedResidual);
      } else {
        const Mlp& net = std::get<Mlp>(tm.models[0]);
        for (std::size_t r : split.calib) {
          const std::vector<double> logits = predict_mlp(net, data.row(r));
          scores.push_back(score_classification(logits, data.label(r)));
          groups.push_back(detail::outcome_group(benchmark, data.targets[r]));
          for (double l : logits) {
            tm.max_abs_cal_logit = std::max(tm.max_abs_cal_logit, std::fabs(l));
          }
        }
        tm.calib = cfg.mondrian
                       ? calibrate_mondrian(scores, groups, cfg.alpha,
                                            ScoreKind::NegativeTrueLogit)
                       : calibrate(scores, cfg.alpha, ScoreKind::NegativeTrueLogit);
      }
      break;
    }
  }
  return tm;
}

// ---------------------------------------------------------------------------
// Per-instance compile and solve

struct InstanceRow {
  std::size_t instance_id = 0;
  std::string method;
  double alpha = 0.0;
  std::string status;
  bool has_solution = false;
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  double solve_seconds = 0.0;
  int oracle_feasible = 0;        // valid only when has_solution
  double predictor_value = 0.0;   // valid only when has_solution
  std::vector<double> x;          // inputs at the incumbent (not serialized)
};

namespace detail {

inline EncodedPredictor encode_predictor(MipModel& model, const Predictor& p,
                                         std::span<const VarRef> inputs,
                                         const std::string& prefix) {
  if (predictor_is_mlp(p)) {
    return encode_mlp(model, std::get<Mlp>(p), inputs, prefix);
  }
  return encode_tree_ensemble(model, std::get<Ensemble>(p), inputs, prefix);
}

// Native prediction summary used for the report column: the model value for
// single-model methods, the member mean (regression) or the in-set member
// fraction (classification) for vote ensembles.
inline double native_value(const TrainedMethod& tm, const Benchmark& b,
                           std::span<const double> x) {
  if (tm.method != Method::Wmicl) {
    if (tm.task == TaskKind::Regression) return predictor_value(tm.models[0], x);
    return static_cast<double>(predict_class(std::get<Mlp>(tm.models[0]), x));
  }
  double acc = 0.0;
  for (const Predictor& p : tm.models) {
    if (tm.task == TaskKind::Regression) {
      acc += predictor_value(p, x);
    } else {
      acc += b.outcome.contains_class(predict_class(std::get<Mlp>(p), x)) ? 1.0 : 0.0;
    }
  }
  return acc / static_cast<double>(tm.models.size());
}

}  // namespace detail

// Assembles the full instance MIP: known-constraint skeleton, sampled-cost
// objective, encoded predictor(s), and the method's outcome-set block.
// Throws CalibrationInfeasibleError when a conformal block cannot be built.
inline ProblemSkeleton build_instance_mip(MipModel& model,
                                          const Benchmark& benchmark,
                                          const TrainedMethod& trained,
                                          Method method,
                                          const ExperimentConfig& cfg,
                                          std::size_t instance_id) {
  ProblemSkeleton skel = build_skeleton(model, benchmark);
  const std::vector<double> costs =
      sample_cost_vector(benchmark, cfg.seed, instance_id);
  LinExpr objective;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    LinExpr term = skel.cost_terms[i];
    term *= costs[i];
    objective += term;
  }
  model.set_objective(std::move(objective));

  switch (method) {
    case Method::Micl: {
      EncodedPredictor enc =
          detail::encode_predictor(model, trained.models.at(0), skel.inputs, "h");
      if (trained.task == TaskKind::Regression) {
        model.add_constraint(enc.outputs[0], Sense::Le, benchmark.outcome.range.hi,
                             "outcome_hi");
        model.add_constraint(enc.outputs[0], Sense::Ge, benchmark.outcome.range.lo,
                             "outcome_lo");
      } else {
        add_argmax_selection(model, enc.outputs, enc.output_bounds,
                             benchmark.outcome, "pick");
      }
      break;
    }
    case Method::Wmicl: {
      const std::size_t p_count = trained.models.size();
      const std::size_t need = vote_threshold(p_count, cfg.alpha);
      LinExpr votes;
      for (std::size_t p = 0; p < p_count; ++p) {
        const std::string tag = "m" + std::to_string(p);
        EncodedPredictor enc =
            detail::encode_predictor(model, trained.models[p], skel.inputs, tag);
        const VarRef z =
            model.add_var(model.fresh_name("vote"), VarKind::Binary, 0.0, 1.0);
        votes += LinExpr(z);
        if (trained.task == TaskKind::Regression) {
          add_soft_interval_membership(model, enc.outputs[0],
                                       enc.output_bounds[0],
                                       benchmark.outcome.range, z, tag + "_in");
        } else {
          add_argmax_selection(model, enc.outputs, enc.output_bounds,
                               benchmark.outcome, tag + "_pick", &z);
        }
      }
      model.add_constraint(std::move(votes), Sense::Ge,
                           static_cast<double>(need), "vote_quorum");
      break;
    }
    case Method::Cmicl: {
      EncodedPredictor enc =
          detail::encode_predictor(model, trained.models.at(0), skel.inputs, "h");
      if (trained.task == TaskKind::Regression) {
        require(trained.has_uncertainty,
                "build_instance_mip: conformal regression needs the "
                "uncertainty model");
        EncodedPredictor unc =
            encode_uncertainty(model, trained.uncertainty, skel.inputs, "u");
        add_regression_conformal(model, enc.outputs[0], unc.outputs[0],
                                 trained.calib, benchmark.outcome.range, "conf");
      } else {
        std::vector<double> q_class(enc.outputs.size());
        for (std::size_t k = 0; k < enc.outputs.size(); ++k) {
          const int group =
              benchmark.outcome.contains_class(static_cast<int>(k)) ? 1 : 0;
          q_class[k] = trained.calib.mondrian
                           ? trained.calib.quantile_for(group)
                           : trained.calib.q_hat;
        }
        const double needed =
            classification_big_m_requirement(enc.output_bounds, q_class);
        const double big_m =
            std::max(default_big_m(trained.max_abs_cal_logit), needed);
        add_classification_conformal(model, enc.outputs, enc.output_bounds,
                                     trained.calib, benchmark.outcome, big_m,
                                     "conf");
      }
      break;
    }
  }
  return skel;
}

inline InstanceRow solve_instance(const Benchmark& benchmark,
                                  const TrainedMethod& trained, Method method,
                                  const ExperimentConfig& cfg,
                                  std::size_t instance_id,
                                  std::ostream* log = nullptr) {
  InstanceRow row;
  row.instance_id = instance_id;
  row.method = method_text(method);
  row.alpha = cfg.alpha;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  try {
    MipModel model;
    const ProblemSkeleton skel =
        build_instance_mip(model, benchmark, trained, method, cfg, instance_id);

    SolveOptions opt;
    opt.rel_gap = cfg.rel_gap;
    opt.node_limit = -1;
    opt.time_limit_s = cfg.time_limit_s;
    opt.log = log;
    SolveResult res = solve_mip(model, opt);

    row.status = mip_status_text(res.status);
    row.solve_seconds = elapsed();
    if (res.has_incumbent()) {
      row.has_solution = true;
      row.objective = res.objective;
      row.bound = res.best_bound;
      row.gap = res.gap;
      row.x.resize(skel.inputs.size());
      for (std::size_t j = 0; j < skel.inputs.size(); ++j) {
        row.x[j] = res.x[skel.inputs[j].index];
      }
      row.oracle_feasible =
          oracle_feasible(benchmark.oracle, row.x, benchmark.outcome) ? 1 : 0;
      row.predictor_value = detail::native_value(trained, benchmark, row.x);
    }
  } catch (const CalibrationInfeasibleError&) {
    row.status = "calibration-infeasible";
    row.solve_seconds = elapsed();
  } catch (const std::exception& e) {
    // A solver breakdown costs one instance, never the batch.
    row.status = "solver-failure";
    row.solve_seconds = elapsed();
    if (log) *log << "instance " << instance_id << " failed: " << e.what() << "\n";
  }
  return row;
}

// Runs the whole batch, optionally across threads.  Rows come back ordered
// by instance id regardless of scheduling.
inline std::vector<InstanceRow> run_experiment(const Benchmark& benchmark,
                                               const TrainedMethod& trained,
                                               const ExperimentConfig& cfg,
                                               std::ostream* log = nullptr) {
  std::vector<InstanceRow> rows(cfg.n_instances);
  const std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < cfg.n_instances; ++i) {
      rows[i] = solve_instance(benchmark, trained, cfg.method, cfg, i, log);
    }
    return rows;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.n_instances) return;
      rows[i] = solve_instance(benchmark, trained, cfg.method, cfg, i, nullptr);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(jobs, cfg.n_instances); ++t) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();
  return rows;
}

// ---------------------------------------------------------------------------
// Report CSV

inline const char* report_header() {
  return "instance_id,method,alpha,status,objective,bound,gap,solve_seconds,"
         "oracle_feasible,predictor_value";
}

inline void write_report_csv(const std::vector<InstanceRow>& rows,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open report file '" + path + "' for writing");
  out << report_header() << "\n";
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (const InstanceRow& r : rows) {
    out << r.instance_id << ',' << r.method << ',' << num(r.alpha) << ','
        << r.status << ',';
    if (r.has_solution) {
      out << num(r.objective) << ',' << num(r.bound) << ',' << num(r.gap) << ','
          << num(r.solve_seconds) << ',' << r.oracle_feasible << ','
          << num(r.predictor_value);
    } else {
      out << ",,," << num(r.solve_seconds) << ",,";
    }
    out << "\n";
  }
  require(out.good(), "failed while writing report file '" + path + "'");
}

inline std::vector<InstanceRow> read_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open report file '" + path + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "report file is empty");
  require(line == report_header(),
          "report file '" + path + "' has an unexpected header");
  std::vector<InstanceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    cells.push_back(cur);
    require(cells.size() == 10, "report line " + std::to_string(line_no) +
                                    " has the wrong number of cells");
    InstanceRow r;
    r.instance_id = static_cast<std::size_t>(std::stoull(cells[0]));
    r.method = cells[1];
    r.alpha = std::stod(cells[2]);
    r.status = cells[3];
    r.solve_seconds = std::stod(cells[7]);
    if (!cells[4].empty()) {
      r.has_solution = true;
      r.objective = std::stod(cells[4]);
      r.bound = std::stod(cells[5]);
      r.gap = std::stod(cells[6]);
      r.oracle_feasible = std::stoi(cells[8]);
      r.predictor_value = std::stod(cells[9]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregation

struct MethodSummary {
  std::string method;
  double alpha = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_solved = 0;       // rows solved to optimality or the target gap
  std::size_t n_feasible = 0;     // oracle-feasible solved rows
  double feasibility_rate = 0.0;  // n_feasible / n_solved
  double feasibility_sem = 0.0;   // sqrt(p(1-p)/n_solved)
  Ci objective_ci;                // mean objective over solved rows
  bool has_objective_ci = false;  // a t-interval needs two or more rows
  double mean_gap = 0.0;
  double total_seconds = 0.0;
  double mean_seconds = 0.0;
  double delta_vs_conformal_pct = 0.0;  // mean per-instance objective gap
  bool has_delta = false;
};

// Rows that count toward feasibility and cost statistics.  Limit-terminated
// incumbents stay in the timing columns only.
inline bool row_is_solved(const InstanceRow& r) {
  return r.has_solution && (r.status == "optimal" || r.status == "gap-reached");
}

inline std::vector<MethodSummary> summarize_report(
    const std::vector<InstanceRow>& rows) {
  std::map<std::pair<std::string, double>, std::vector<const InstanceRow*>> by_key;
  for (const InstanceRow& r : rows) by_key[{r.method, r.alpha}].push_back(&r);

  // Conformal objectives per (alpha, instance) for the relative-cost column.
  std::map<std::pair<double, std::size_t>, double> conformal_obj;
  for (const InstanceRow& r : rows) {
    if (r.method == "cmicl" && row_is_solved(r)) {
      conformal_obj[{r.alpha, r.instance_id}] = r.objective;
    }
  }

  std::vector<MethodSummary> out;
  for (const auto& [key, group] : by_key) {
    MethodSummary s;
    s.method = key.first;
    s.alpha = key.second;
    s.n_rows = group.size();
    std::vector<double> objectives;
    std::vector<double> deltas;
    for (const InstanceRow* r : group) {
      s.total_seconds += r->solve_seconds;
      if (!row_is_solved(*r)) continue;
      ++s.n_solved;
      s.n_feasible += r->oracle_feasible ? 1 : 0;
      objectives.push_back(r->objective);
      s.mean_gap += r->gap;
      const auto it = conformal_obj.find({r->alpha, r->instance_id});
      if (it != conformal_obj.end() && s.method != "cmicl") {
        deltas.push_back((r->objective - it->second) / it->second * 100.0);
      }
    }
    s.mean_seconds = s.total_seconds / static_cast<double>(s.n_rows);
    if (s.n_solved > 0) {
      s.feasibility_rate =
          static_cast<double>(s.n_feasible) / static_cast<double>(s.n_solved);
      s.feasibility_sem = std::sqrt(
          s.feasibility_rate * (1.0 - s.feasibility_rate) /
          static_cast<double>(s.n_solved));
      if (objectives.size() >= 2) {
        s.objective_ci = mean_ci95(objectives);
        s.has_objective_ci = true;
      } else {
        s.objective_ci.center = objectives.front();
      }
      s.mean_gap /= static_cast<double>(s.n_solved);
    }
    if (!deltas.empty()) {
      s.has_delta = true;
      s.delta_vs_conformal_pct = mean(deltas);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::string format_summary(const std::vector<InstanceRow>& rows) {
  std::ostringstream os;
  os << "method   alpha  n    solved  feas-rate  sem     mean-obj      ci95-hw"
     << "      mean-gap  total-s   dCost%\n";
  char buf[256];
  for (const MethodSummary& s : summarize_report(rows)) {
    const std::string hw =
        s.has_objective_ci ? detail::format("%.4g", s.objective_ci.half_width)
                           : "-";
    std::snprintf(buf, sizeof buf,
                  "%-8s %-6.3g %-4zu %-7zu %-10.4f %-7.4f %-13.6g %-12s "
                  "%-9.4g %-9.3f %s\n",
                  s.method.c_str(), s.alpha, s.n_rows, s.n_solved,
                  s.feasibility_rate, s.feasibility_sem, s.objective_ci.center,
                  hw.c_str(), s.mean_gap, s.total_seconds,
                  s.has_delta
                      ? detail::format("%+.3f", s.delta_vs_conformal_pct).c_str()
                      : "-");
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Coverage studies (no optimization; checks the conformal machinery itself)

struct CoverageConfig {
  ProblemKind problem = ProblemKind::Reactor;
  double alpha = 0.1;
  bool mondrian = false;
  std::size_t n_train = 400;
  std::size_t n_cal = 200;
  std::size_t n_test = 1000;
  std::size_t n_seeds = 20;
  std::uint64_t seed = 7;
  double noise_sigma = 0.5;
  MlpTrainConfig mlp;
  MlpTrainConfig uncertainty;

  CoverageConfig() {
    mlp.hidden = {16};
    mlp.epochs = 400;
    uncertainty.hidden = {8};
    uncertainty.epochs = 300;
  }
};

struct CoverageOutcome {
  double mean_overall = 0.0;
  std::vector<double> per_seed;
  // Mean per-group coverage, keyed by group label (0 = outside outcome set).
  std::map<int, double> mean_by_group;
  // Mean coverage by target stratum: deciles of y for regression (keys 0-9),
  // class labels for classification.  Empty strata are absent, not zero.
  std::map<int, double> mean_by_stratum;
};

inline CoverageOutcome run_coverage(const CoverageConfig& cfg) {
  const Benchmark bench = make_benchmark(cfg.problem);
  CoverageOutcome out;
  std::map<int, double> group_sum;
  std::map<int, std::size_t> group_n;
  std::map<int, double> stratum_sum;
  std::map<int, std::size_t> stratum_n;

  for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
    const Dataset train = sample_benchmark_data(
        bench, cfg.n_train, derive_seed(cfg.seed, "cov-train", s), cfg.noise_sigma);
    const Dataset cal = sample_benchmark_data(
        bench, cfg.n_cal, derive_seed(cfg.seed, "cov-cal", s), cfg.noise_sigma);
    const Dataset test = sample_benchmark_data(
        bench, cfg.n_test, derive_seed(cfg.seed, "cov-test", s), cfg.noise_sigma);

    MlpTrainConfig net_cfg = cfg.mlp;
    net_cfg.seed = derive_seed(cfg.seed, "cov-net", s);
    const Mlp net = train_mlp(train, train.all_rows(), net_cfg);

    UncertaintyModel unc;
    if (bench.outcome.task == TaskKind::Regression) {
      MlpTrainConfig u_cfg = cfg.uncertainty;
      u_cfg.seed = derive_seed(cfg.seed, "cov-unc", s);
      unc = fit_uncertainty(net, train, train.all_rows(), u_cfg);
    }

    auto score_of = [&](const Dataset& d, std::size_t r) {
      if (bench.outcome.task == TaskKind::Regression) {
        return score_regression(predict_scalar(net, d.row(r)),
                                predict_uncertainty(unc, d.row(r)), d.targets[r]);
      }
      return score_classification(predict_mlp(net, d.row(r)), d.label(r));
    };

    std::vector<double> cal_scores, test_scores;
    std::vector<int> cal_groups, test_groups;
    for (std::size_t r = 0; r < cal.n_rows; ++r) {
      cal_scores.push_back(score_of(cal, r));
      cal_groups.push_back(detail::outcome_group(bench, cal.targets[r]));
    }
    for (std::size_t r = 0; r < test.n_rows; ++r) {
      test_scores.push_back(score_of(test, r));
      test_groups.push_back(detail::outcome_group(bench, test.targets[r]));
    }

    const ScoreKind kind = bench.outcome.task == TaskKind::Regression
                               ? ScoreKind::NormalizedResidual
                               : ScoreKind::NegativeTrueLogit;
    const Calibration calib =
        cfg.mondrian ? calibrate_mondrian(cal_scores, cal_groups, cfg.alpha, kind)
                     : calibrate(cal_scores, cfg.alpha, kind);
    const CoverageReport rep = coverage_eval(calib, test_scores, test_groups);
    out.per_seed.push_back(rep.overall);
    out.mean_overall += rep.overall;
    for (const StratumCoverage& st : rep.strata) {
      group_sum[st.group] += st.coverage;
      group_n[st.group] += 1;
    }

    // Target-value strata: deciles of y (rank-based, so each has ~n/10
    // points) for regression, class labels for classification.
    std::vector<int> strata(test.n_rows);
    if (bench.outcome.task == TaskKind::Regression) {
      std::vector<std::size_t> order(test.n_rows);
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&test](std::size_t a, std::size_t b) {
        return test.targets[a] < test.targets[b];
      });
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        strata[order[pos]] =
            static_cast<int>(std::min<std::size_t>(pos * 10 / order.size(), 9));
      }
    } else {
      for (std::size_t i = 0; i < test.n_rows; ++i) strata[i] = test.label(i);
    }
    std::map<int, std::pair<std::size_t, std::size_t>> hit_n;  // stratum -> (hits, n)
    for (std::size_t i = 0; i < test.n_rows; ++i) {
      const double q = calib.mondrian ? calib.quantile_for(test_groups[i])
                                      : calib.q_hat;
      auto& [hits, count] = hit_n[strata[i]];
      hits += test_scores[i] <= q ? 1 : 0;
      ++count;
    }
    for (const auto& [stratum, hn] : hit_n) {
      stratum_sum[stratum] +=
          static_cast<double>(hn.first) / static_cast<double>(hn.second);
      stratum_n[stratum] += 1;
    }
  }
  out.mean_overall /= static_cast<double>(cfg.n_seeds);
  for (const auto& [g, sum] : group_sum) {
    out.mean_by_group[g] = sum / static_cast<double>(group_n[g]);
  }
  for (const auto& [st, sum] : stratum_sum) {
    out.mean_by_stratum[st] = sum / static_cast<double>(stratum_n[st]);
  }
  return out;
}

}  // namespace comicl
