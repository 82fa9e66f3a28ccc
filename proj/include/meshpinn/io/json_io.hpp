#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"
#include "meshpinn/loss.hpp"
#include "meshpinn/network.hpp"
#include "meshpinn/train.hpp"

/// JSON documents: geometry input, training config, model checkpoint.
///
/// Geometry:
///   {
///     "bottom": [[x, y], ...], "top": [...], "left": [...], "right": [...],
///     "aux_lines": [ {"points": [[x, y], ...], "fixed_axis": "xi" | "eta",
///                     "fixed_value": v}, ... ]          // optional
///   }
/// Unknown keys are rejected at every level.

namespace meshpinn::io {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw InputError(what + ": malformed JSON: " + e.what());
  }
}

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw InputError(where + ": unknown key \"" + key + "\"");
  }
}

inline std::vector<Vec2> read_points(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw InputError(where + ": expected an array of [x, y] pairs");
  std::vector<Vec2> pts;
  pts.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw InputError(where + ": every point must be a pair of numbers");
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return pts;
}

inline json write_points(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace detail

inline GeometrySpec geometry_from_json(const json& doc) {
  detail::reject_unknown(doc, {"bottom", "top", "left", "right", "aux_lines"}, "geometry");
  GeometrySpec g;
  for (Side s : kBoundarySides) {
    const std::string key(to_string(s));
    if (!doc.contains(key)) throw InputError("geometry: missing \"" + key + "\"");
  }
  g.bottom.points = detail::read_points(doc.at("bottom"), "geometry.bottom");
  g.top.points = detail::read_points(doc.at("top"), "geometry.top");
  g.left.points = detail::read_points(doc.at("left"), "geometry.left");
  g.right.points = detail::read_points(doc.at("right"), "geometry.right");
  if (doc.contains("aux_lines")) {
    const auto& arr = doc.at("aux_lines");
    if (!arr.is_array()) throw InputError("geometry.aux_lines: expected an array");
    for (std::size_t a = 0; a < arr.size(); ++a) {
      const std::string where = "geometry.aux_lines[" + std::to_string(a) + "]";
      const auto& obj = arr[a];
      detail::reject_unknown(obj, {"points", "fixed_axis", "fixed_value"}, where);
      if (!obj.contains("points") || !obj.contains("fixed_axis") || !obj.contains("fixed_value"))
        throw InputError(where + ": needs points, fixed_axis and fixed_value");
      AuxiliaryLine line;
      line.points = detail::read_points(obj.at("points"), where + ".points");
      const auto& axis = obj.at("fixed_axis");
      if (axis == "xi") {
        line.fixed_axis = Axis::xi;
      } else if (axis == "eta") {
        line.fixed_axis = Axis::eta;
      } else {
        throw InputError(where + ".fixed_axis: must be \"xi\" or \"eta\"");
      }
      if (!obj.at("fixed_value").is_number()) throw InputError(where + ".fixed_value: not a number");
      line.fixed_value = obj.at("fixed_value").get<double>();
      g.aux_lines.push_back(std::move(line));
    }
  }
  return g;
}

inline json geometry_to_json(const GeometrySpec& g) {
  json doc;
  doc["bottom"] = detail::write_points(g.bottom.points);
  doc["top"] = detail::write_points(g.top.points);
  doc["left"] = detail::write_points(g.left.points);
  doc["right"] = detail::write_points(g.right.points);
  if (!g.aux_lines.empty()) {
    json arr = json::array();
    for (const auto& line : g.aux_lines) {
      arr.push_back({{"points", detail::write_points(line.points)},
                     {"fixed_axis", line.fixed_axis == Axis::xi ? "xi" : "eta"},
                     {"fixed_value", line.fixed_value}});
    }
    doc["aux_lines"] = arr;
  }
  return doc;
}

inline GeometrySpec load_geometry(const std::string& path) {
  return geometry_from_json(parse_json(read_file(path), path));
}

// ---------------------------------------------------------------------------
// TrainConfig. Every key is optional; missing keys keep their defaults.

inline json config_to_json(const TrainConfig& c) {
  return json{
      {"layers", c.layers},
      {"neurons", c.neurons},
      {"adam_epochs", c.adam_epochs},
      {"adam_batch_interior", c.adam_batch_interior},
      {"bcs_per_side", c.bcs_per_side},
      {"aux_points", c.aux_points},
      {"lr0", c.lr0},
      {"lr_decay", c.lr_decay},
      {"lr_step", c.lr_step},
      {"lbfgs_batch_interior", c.lbfgs_batch_interior},
      {"lbfgs_bcs_per_side", c.lbfgs_bcs_per_side},
      {"lbfgs_aux_points", c.lbfgs_aux_points},
      {"lbfgs_max_iters", c.lbfgs_max_iters},
      {"lbfgs_memory", c.lbfgs_memory},
      {"lbfgs_tol_grad", c.lbfgs_tol_grad},
      {"lbfgs_tol_loss", c.lbfgs_tol_loss},
      {"lambda1_init", c.lambda1_init},
      {"lambda2", c.lambda2},
      {"dynamic_lambda1", c.dynamic_lambda1},
      {"lambda1_interval", c.lambda1_interval},
      {"lambda1_rate", c.lambda1_rate},
      {"seed", c.seed},
      {"no_aux", c.no_aux},
      {"plain_mlp", c.plain_mlp},
      {"beta_form", c.beta == BetaForm::standard ? "standard" : "transcribed"},
      {"fit_max_depth", c.fit_max_depth},
      {"fit_min_leaf", c.fit_min_leaf},
  };
}

/// Overlays the keys present in `doc` onto `base`.
inline TrainConfig config_from_json(const json& doc, TrainConfig base = {}) {
  if (!doc.is_object()) throw InputError("config: expected a JSON object");
  const json known = config_to_json(base);
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw InputError("config: unknown key \"" + key + "\"");
    const auto& ref = known.at(key);
    const bool type_ok = (ref.is_boolean() && value.is_boolean()) ||
                         (ref.is_number_integer() && value.is_number_integer()) ||
                         (ref.is_number_unsigned() && value.is_number_integer()) ||
                         (ref.is_number_float() && value.is_number()) ||
                         (ref.is_string() && value.is_string());
    if (!type_ok) throw InputError("config: key \"" + key + "\" has the wrong type");
  }
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  TrainConfig c = base;
  get("layers", c.layers);
  get("neurons", c.neurons);
  get("adam_epochs", c.adam_epochs);
  get("adam_batch_interior", c.adam_batch_interior);
  get("bcs_per_side", c.bcs_per_side);
  get("aux_points", c.aux_points);
  get("lr0", c.lr0);
  get("lr_decay", c.lr_decay);
  get("lr_step", c.lr_step);
  get("lbfgs_batch_interior", c.lbfgs_batch_interior);
  get("lbfgs_bcs_per_side", c.lbfgs_bcs_per_side);
  get("lbfgs_aux_points", c.lbfgs_aux_points);
  get("lbfgs_max_iters", c.lbfgs_max_iters);
  get("lbfgs_memory", c.lbfgs_memory);
  get("lbfgs_tol_grad", c.lbfgs_tol_grad);
  get("lbfgs_tol_loss", c.lbfgs_tol_loss);
  get("lambda1_init", c.lambda1_init);
  get("lambda2", c.lambda2);
  get("dynamic_lambda1", c.dynamic_lambda1);
  get("lambda1_interval", c.lambda1_interval);
  get("lambda1_rate", c.lambda1_rate);
  get("seed", c.seed);
  get("no_aux", c.no_aux);
  get("plain_mlp", c.plain_mlp);
  get("fit_max_depth", c.fit_max_depth);
  get("fit_min_leaf", c.fit_min_leaf);
  if (doc.contains("beta_form")) {
    const auto s = doc.at("beta_form").get<std::string>();
    if (s == "standard") {
      c.beta = BetaForm::standard;
    } else if (s == "transcribed") {
      c.beta = BetaForm::transcribed;
    } else {
      throw InputError("config: beta_form must be \"standard\" or \"transcribed\"");
    }
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Checkpoint: header plus the flat parameter vector in layout order.

inline constexpr int kCheckpointVersion = 1;

inline json checkpoint_to_json(const MeshNetParams& p, std::uint64_t seed) {
  return json{{"format", "meshpinn-checkpoint"},
              {"version", kCheckpointVersion},
              {"architecture", std::string(to_string(p.architecture()))},
              {"layers", p.layers()},
              {"neurons", p.neurons()},
              {"seed", seed},
              {"params", std::vector<double>(p.flat().begin(), p.flat().end())}};
}

inline MeshNetParams checkpoint_from_json(const json& doc) {
  detail::reject_unknown(doc, {"format", "version", "architecture", "layers", "neurons", "seed",
                               "params"},
                         "checkpoint");
  try {
    if (doc.at("format") != "meshpinn-checkpoint") throw InputError("checkpoint: wrong format tag");
    if (doc.at("version").get<int>() != kCheckpointVersion)
      throw InputError("checkpoint: unsupported version");
    const auto arch_name = doc.at("architecture").get<std::string>();
    Architecture arch;
    if (arch_name == "gated") {
      arch = Architecture::gated;
    } else if (arch_name == "plain") {
      arch = Architecture::plain;
    } else {
      throw InputError("checkpoint: unknown architecture " + arch_name);
    }
    return MeshNetParams(doc.at("layers").get<int>(), doc.at("neurons").get<int>(), arch,
                         doc.at("params").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace meshpinn::io
