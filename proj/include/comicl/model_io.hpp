#pragma once

// Versioned JSON serialization for predictors, uncertainty models, and
// calibrations.  Doubles round-trip exactly (shortest-representation
// printing); infinite quantiles are stored as the string "inf".

#include <fstream>
#include <string>

#include <json.hpp>

#include "comicl/conformal.hpp"
#include "comicl/predictor.hpp"

namespace comicl {

constexpr const char* kModelFormat = "comicl-model/1";
constexpr const char* kCalibrationFormat = "comicl-calibration/1";

namespace detail {

inline nlohmann::json json_quantile(double q) {
  if (std::isinf(q)) return "inf";
  return q;
}

inline double quantile_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    require(j.get<std::string>() == "inf", "bad quantile encoding");
    return kInf;
  }
  return j.get<double>();
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw Error("cannot open file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in " + path + ": " + e.what());
  }
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out.good()) throw Error("cannot write file: " + path);
  out << j.dump(2) << "\n";
  require(out.good(), "write failed for " + path);
}

inline void check_format(const nlohmann::json& j, const char* want,
                         const std::string& path) {
  if (!j.contains("format") || !j["format"].is_string() ||
      j["format"].get<std::string>() != want) {
    throw Error("file " + path + " does not have format '" + want + "'");
  }
}

}  // namespace detail

inline nlohmann::json mlp_to_json(const Mlp& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& L : m.layers) {
    layers.push_back({{"in", L.in}, {"out", L.out}, {"w", L.w}, {"b", L.b}});
  }
  return {{"kind", "mlp"}, {"layers", layers}};
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m;
  for (const auto& lj : j.at("layers")) {
    Layer L;
    L.in = lj.at("in").get<std::size_t>();
    L.out = lj.at("out").get<std::size_t>();
    L.w = lj.at("w").get<std::vector<double>>();
    L.b = lj.at("b").get<std::vector<double>>();
    require(L.w.size() == L.in * L.out && L.b.size() == L.out,
            "mlp_from_json: layer shape mismatch");
    m.layers.push_back(std::move(L));
  }
  require(!m.layers.empty(), "mlp_from_json: no layers");
  return m;
}

inline nlohmann::json ensemble_to_json(const Ensemble& e) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : e.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : t.nodes) {
      nlohmann::json nj;
      nj["leaf"] = n.leaf;
      if (n.leaf) {
        if (n.coef.empty()) {
          nj["value"] = n.value;
        } else {
          nj["coef"] = n.coef;
          nj["intercept"] = n.intercept;
        }
      } else {
        nj["feature"] = n.feature;
        nj["threshold"] = n.threshold;
        nj["left"] = n.left;
        nj["right"] = n.right;
      }
      nodes.push_back(std::move(nj));
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  const char* combine = e.combine == Combine::Single
                            ? "single"
                            : (e.combine == Combine::Average ? "average" : "boosted");
  return {{"kind", "tree-ensemble"}, {"combine", combine},
          {"base", e.base},          {"lr", e.lr},
          {"linear_leaves", e.linear_leaves}, {"n_features", e.n_features},
          {"trees", std::move(trees)}};
}

inline Ensemble ensemble_from_json(const nlohmann::json& j) {
  Ensemble e;
  const std::string combine = j.at("combine").get<std::string>();
  if (combine == "single") {
    e.combine = Combine::Single;
  } else if (combine == "average") {
    e.combine = Combine::Average;
  } else if (combine == "boosted") {
    e.combine = Combine::Boosted;
  } else {
    throw Error("ensemble_from_json: unknown combine mode '" + combine + "'");
  }
  e.base = j.at("base").get<double>();
  e.lr = j.at("lr").get<double>();
  e.linear_leaves = j.at("linear_leaves").get<bool>();
  e.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode n;
      n.leaf = nj.at("leaf").get<bool>();
      if (n.leaf) {
        if (nj.contains("coef")) {
          n.coef = nj.at("coef").get<std::vector<double>>();
          n.intercept = nj.at("intercept").get<double>();
        } else {
          n.value = nj.at("value").get<double>();
        }
      } else {
        n.feature = nj.at("feature").get<int>();
        n.threshold = nj.at("threshold").get<double>();
        n.left = nj.at("left").get<int>();
        n.right = nj.at("right").get<int>();
      }
      t.nodes.push_back(std::move(n));
    }
    require(!t.nodes.empty(), "ensemble_from_json: empty tree");
    e.trees.push_back(std::move(t));
  }
  require(!e.trees.empty(), "ensemble_from_json: no trees");
  return e;
}

inline void save_predictor(const Predictor& p, const std::string& path) {
  nlohmann::json j = predictor_is_mlp(p) ? mlp_to_json(std::get<Mlp>(p))
                                         : ensemble_to_json(std::get<Ensemble>(p));
  j["format"] = kModelFormat;
  detail::write_json_file(j, path);
}

inline Predictor load_predictor(const std::string& path) {
  const nlohmann::json j = detail::read_json_file(path);
  detail::check_format(j, kModelFormat, path);
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "mlp") return mlp_from_json(j);
  if (kind == "tree-ensemble") return ensemble_from_json(j);
  throw Error("file " + path + " has unknown model kind '" + kind + "'");
}

inline void save_uncertainty(const UncertaintyModel& u, const std::string& path) {
  nlohmann::json j = {{"format", kModelFormat},
                      {"kind", "uncertainty"},
                      {"floor", u.floor},
                      {"net", mlp_to_json(u.net)}};
  detail::write_json_file(j, path);
}

inline UncertaintyModel load_uncertainty(const std::string& path) {
  const nlohmann::json j = detail::read_json_file(path);
  detail::check_format(j, kModelFormat, path);
  require(j.at("kind").get<std::string>() == "uncertainty",
          "file " + path + " is not an uncertainty model");
  UncertaintyModel u;
  u.floor = j.at("floor").get<double>();
  u.net = mlp_from_json(j.at("net"));
  return u;
}

inline void save_calibration(const Calibration& c, const std::string& path) {
  nlohmann::json groups = nlohmann::json::array();
  for (const GroupQuantile& g : c.groups) {
    groups.push_back({{"group", g.group},
                      {"q_hat", detail::json_quantile(g.q_hat)},
                      {"n", g.n}});
  }
  const nlohmann::json j = {{"format", kCalibrationFormat},
                            {"alpha", c.alpha},
                            {"kind", score_kind_text(c.kind)},
                            {"n_total", c.n_total},
                            {"q_hat", detail::json_quantile(c.q_hat)},
                            {"mondrian", c.mondrian},
                            {"groups", groups}};
  detail::write_json_file(j, path);
}

inline Calibration load_calibration(const std::string& path) {
  const nlohmann::json j = detail::read_json_file(path);
  detail::check_format(j, kCalibrationFormat, path);
  Calibration c;
  c.alpha = j.at("alpha").get<double>();
  c.kind = score_kind_from_text(j.at("kind").get<std::string>());
  c.n_total = j.at("n_total").get<std::size_t>();
  c.q_hat = detail::quantile_from_json(j.at("q_hat"));
  c.mondrian = j.at("mondrian").get<bool>();
  for (const auto& gj : j.at("groups")) {
    c.groups.push_back(GroupQuantile{gj.at("group").get<int>(),
                                     detail::quantile_from_json(gj.at("q_hat")),
                                     gj.at("n").get<std::size_t>()});
  }
  return c;
}

}  // namespace comicl
