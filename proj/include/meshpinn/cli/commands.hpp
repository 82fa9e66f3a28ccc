#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meshpinn/classical.hpp"
#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"
#include "meshpinn/io/json_io.hpp"
#include "meshpinn/io/mesh_io.hpp"
#include "meshpinn/io/report_io.hpp"
#include "meshpinn/network.hpp"
#include "meshpinn/quality.hpp"
#include "meshpinn/train.hpp"

/// Command implementations behind the `meshpinn` executable. They take fully
/// resolved options so tests can drive them without going through argv.

namespace meshpinn::cli {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

enum class Method { pinn, tfi, elliptic };

inline Method parse_method(const std::string& s) {
  if (s == "pinn") return Method::pinn;
  if (s == "tfi") return Method::tfi;
  if (s == "elliptic") return Method::elliptic;
  throw InputError("unknown method \"" + s + "\" (expected pinn, tfi or elliptic)");
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::pinn: return "pinn";
    case Method::tfi: return "tfi";
    case Method::elliptic: return "elliptic";
  }
  return "?";
}

struct GenerateOptions {
  std::string geometry_path;
  Method method = Method::pinn;
  int ni = 33;
  int nj = 33;
  std::vector<std::string> formats{"vtk"};
  std::string out_dir = ".";
  TrainConfig config;
  bool snap_boundary = false;
  int elliptic_iterations = 1000;
  EllipticInit elliptic_init = EllipticInit::tfi;
  double omega = 1.5;
  TfiForm tfi_form = TfiForm::corrected;
  int svg_width = 800;
};

struct GenerateResult {
  StructuredMesh mesh;
  QualityReport report;
  std::vector<std::string> outputs;
  json manifest;
};

inline std::string init_name(EllipticInit i) { return i == EllipticInit::zero ? "zero" : "tfi"; }

inline json options_to_json(const GenerateOptions& o) {
  return json{{"geometry", o.geometry_path},
              {"method", to_string(o.method)},
              {"ni", o.ni},
              {"nj", o.nj},
              {"formats", o.formats},
              {"snap_boundary", o.snap_boundary},
              {"config", io::config_to_json(o.config)},
              {"elliptic",
               {{"iterations", o.elliptic_iterations},
                {"init", init_name(o.elliptic_init)},
                {"omega", o.omega}}},
              {"tfi_form", o.tfi_form == TfiForm::corrected ? "corrected" : "transcribed"},
              {"svg_width", o.svg_width}};
}

/// Rebuilds the options recorded in a manifest. The geometry hash must still
/// match the file on disk.
inline GenerateOptions options_from_manifest(const json& manifest) {
  try {
    const auto& o = manifest.at("options");
    GenerateOptions opt;
    opt.geometry_path = o.at("geometry").get<std::string>();
    opt.method = parse_method(o.at("method").get<std::string>());
    opt.ni = o.at("ni").get<int>();
    opt.nj = o.at("nj").get<int>();
    opt.formats = o.at("formats").get<std::vector<std::string>>();
    opt.snap_boundary = o.at("snap_boundary").get<bool>();
    opt.config = io::config_from_json(o.at("config"));
    const auto& e = o.at("elliptic");
    opt.elliptic_iterations = e.at("iterations").get<int>();
    opt.elliptic_init = e.at("init") == "zero" ? EllipticInit::zero : EllipticInit::tfi;
    opt.omega = e.at("omega").get<double>();
    opt.tfi_form = o.at("tfi_form") == "transcribed" ? TfiForm::transcribed : TfiForm::corrected;
    opt.svg_width = o.at("svg_width").get<int>();
    const auto want = manifest.at("geometry_fnv1a64").get<std::string>();
    if (io::fnv1a64(io::read_file(opt.geometry_path)) != want)
      throw InputError("manifest: geometry file " + opt.geometry_path + " has changed");
    return opt;
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
}

inline GenerateResult run_generate(const GenerateOptions& opt) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };
  for (const auto& f : opt.formats)
    if (f != "vtk" && f != "p3d" && f != "svg") throw InputError("unknown output format " + f);
  if (opt.ni < 2 || opt.nj < 2) throw InputError("ni and nj must be >= 2");
  opt.config.validate();

  const auto geometry_text = io::read_file(opt.geometry_path);
  const auto spec = io::geometry_from_json(io::parse_json(geometry_text, opt.geometry_path));
  require_valid(spec);

  const auto t0 = clock::now();
  const auto fit = build_boundary_fit(spec, opt.config.fit_max_depth, opt.config.fit_min_leaf);
  const auto t_fit = clock::now();

  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  GenerateResult res;
  json timings;
  timings["fit_s"] = seconds(t0, t_fit);

  switch (opt.method) {
    case Method::tfi: {
      res.mesh = tfi(discretize_boundary(fit, opt.ni, opt.nj), opt.tfi_form);
      break;
    }
    case Method::elliptic: {
      auto er = elliptic_smooth(discretize_boundary(fit, opt.ni, opt.nj), opt.elliptic_iterations,
                                opt.elliptic_init, opt.omega);
      res.mesh = std::move(er.mesh);
      break;
    }
    case Method::pinn: {
      const auto tr = train(spec, fit, opt.config);
      const auto t_train = clock::now();
      timings["train_s"] = seconds(t_fit, t_train);
      res.mesh = generate_mesh(tr.params, opt.ni, opt.nj, opt.snap_boundary, &fit);
      io::write_file_atomic(dir / "checkpoint.json",
                            io::checkpoint_to_json(tr.params, opt.config.seed).dump(1) + "\n");
      io::write_file_atomic(dir / "train_log.csv", io::train_log_csv(tr.history));
      res.outputs.push_back((dir / "checkpoint.json").string());
      res.outputs.push_back((dir / "train_log.csv").string());
      break;
    }
  }
  const auto t_mesh = clock::now();
  timings["mesh_s"] = seconds(t_fit, t_mesh);

  for (const auto& f : opt.formats) {
    const auto path = dir / ("mesh." + f);
    if (f == "vtk") io::write_file_atomic(path, io::write_mesh_vtk(res.mesh));
    if (f == "p3d") io::write_file_atomic(path, io::write_mesh_p3d(res.mesh));
    if (f == "svg") io::write_file_atomic(path, io::render_svg(res.mesh, opt.svg_width));
    res.outputs.push_back(path.string());
  }
  res.report = evaluate_mesh(res.mesh);
  io::write_file_atomic(dir / "quality.json", io::report_to_json(res.report).dump(2) + "\n");
  io::write_file_atomic(dir / "quality_histogram.csv", io::report_histogram_csv(res.report));
  res.outputs.push_back((dir / "quality.json").string());
  res.outputs.push_back((dir / "quality_histogram.csv").string());
  timings["total_s"] = seconds(t0, clock::now());

  res.manifest = json{{"tool", "meshpinn"},
                      {"version", kToolVersion},
                      {"command", "generate"},
                      {"options", options_to_json(opt)},
                      {"seed", opt.config.seed},
                      {"geometry_fnv1a64", io::fnv1a64(geometry_text)},
                      {"outputs", res.outputs},
                      {"timings", timings}};
  io::write_file_atomic(dir / "manifest.json", res.manifest.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------------------
// Architecture sweep

struct SweepOptions {
  std::string geometry_path;
  std::vector<int> layers;
  std::vector<int> neurons;
  std::vector<std::uint64_t> seeds{0};
  TrainConfig config;
  std::string out_csv;  // empty: return only
};

inline constexpr const char* kSweepHeader =
    "layers,neurons,seed,loss_eqns,loss_bcs,loss_data,lambda1,loss_total,wall_time_s,status,"
    "error\n";

inline std::string csv_escape(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Trains every (layers, neurons, seed) combination. Failed runs are
/// recorded with status "error" and the sweep continues. Rows are appended
/// to `out_csv` as they finish; the header is written only to a new file.
inline std::string run_sweep(const SweepOptions& opt,
                             const std::function<void(const std::string&)>& on_row = {}) {
  if (opt.layers.empty() || opt.neurons.empty() || opt.seeds.empty())
    throw InputError("sweep: layers, neurons and seeds must be non-empty");
  const auto spec = io::load_geometry(opt.geometry_path);
  require_valid(spec);
  const auto fit = build_boundary_fit(spec, opt.config.fit_max_depth, opt.config.fit_min_leaf);

  std::ofstream file;
  if (!opt.out_csv.empty()) {
    const bool fresh = !fs::exists(opt.out_csv) || fs::file_size(opt.out_csv) == 0;
    file.open(opt.out_csv, std::ios::app);
    if (!file) throw InputError("cannot write " + opt.out_csv);
    if (fresh) file << kSweepHeader << std::flush;
  }
  std::string csv = kSweepHeader;
  for (int L : opt.layers) {
    for (int H : opt.neurons) {
      for (auto seed : opt.seeds) {
        TrainConfig cfg = opt.config;
        cfg.layers = L;
        cfg.neurons = H;
        cfg.seed = seed;
        const auto t0 = std::chrono::steady_clock::now();
        std::string row = std::to_string(L) + "," + std::to_string(H) + "," + std::to_string(seed);
        try {
          const auto tr = train(spec, fit, cfg);
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          const auto& l = tr.history.final_record()->loss;
          for (double v : {l.eqns, l.bcs(), l.data, l.lambda1, l.total}) row += "," + io::format_double(v);
          row += "," + io::format_double(secs) + ",ok,";
        } catch (const std::exception& e) {
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          row += ",,,,,," + io::format_double(secs) + ",error," + csv_escape(e.what());
        }
        row += "\n";
        csv += row;
        if (file.is_open()) file << row << std::flush;
        if (on_row) on_row(row);
      }
    }
  }
  return csv;
}

// ---------------------------------------------------------------------------
// evaluate / fit-boundary

inline StructuredMesh load_mesh(const std::string& path) {
  const auto text = io::read_file(path);
  const auto ext = fs::path(path).extension().string();
  if (ext == ".vtk") return io::read_mesh_vtk(text);
  if (ext == ".p3d") return io::read_mesh_p3d(text);
  throw InputError("evaluate: unsupported mesh extension \"" + ext + "\" (expected .vtk or .p3d)");
}

/// CSV of the fitted boundary curves: side,t,x,y at `samples` uniform t per side.
inline std::string fit_boundary_csv(const GeometrySpec& spec, int samples, int max_depth,
                                    int min_leaf) {
  if (samples < 2) throw InputError("fit-boundary: samples must be >= 2");
  require_valid(spec);
  const auto fit = build_boundary_fit(spec, max_depth, min_leaf);
  std::string out = "side,t,x,y\n";
  for (Side s : kBoundarySides) {
    for (int k = 0; k < samples; ++k) {
      const double t = grid_coord(k, samples);
      const Vec2 p = fit.side(s)(t);
      out += std::string(meshpinn::to_string(s)) + "," + io::format_double(t) + "," +
             io::format_double(p.x) + "," + io::format_double(p.y) + "\n";
    }
  }
  return out;
}

}  // namespace meshpinn::cli
