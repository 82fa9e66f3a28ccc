#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshpinn/cli/commands.hpp"
#include "meshpinn/parallel.hpp"

namespace {

using namespace meshpinn;

/// Training flags shared by `generate` and `sweep`. Unset flags leave the
/// config file (or the defaults) alone.
struct TrainFlags {
  std::string config_path;
  std::optional<int> layers, neurons, adam_epochs, lbfgs_iters, threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> beta_form;
  bool no_aux = false;
  bool plain_mlp = false;

  void attach(CLI::App& app, bool with_arch) {
    app.add_option("--config", config_path, "training config JSON (keys override defaults)")
        ->check(CLI::ExistingFile);
    if (with_arch) {
      app.add_option("--layers", layers, "hidden layers per sub-network");
      app.add_option("--neurons", neurons, "neurons per hidden layer");
      app.add_option("--seed", seed, "master seed");
    }
    app.add_option("--adam-epochs", adam_epochs, "Adam epochs");
    app.add_option("--lbfgs-iters", lbfgs_iters, "L-BFGS iteration cap");
    app.add_option("--beta-form", beta_form, "cross-derivative coefficient form")
        ->check(CLI::IsMember({"standard", "transcribed"}));
    app.add_option("--threads", threads, "worker threads (default: MESHPINN_THREADS or hardware)");
    app.add_flag("--no-aux", no_aux, "drop the auxiliary-line data term");
    app.add_flag("--plain-mlp", plain_mlp, "plain tanh MLP instead of the gated network");
  }

  TrainConfig resolve() const {
    TrainConfig c;
    if (!config_path.empty())
      c = io::config_from_json(io::parse_json(io::read_file(config_path), config_path));
    if (layers) c.layers = *layers;
    if (neurons) c.neurons = *neurons;
    if (seed) c.seed = *seed;
    if (adam_epochs) c.adam_epochs = *adam_epochs;
    if (lbfgs_iters) c.lbfgs_max_iters = *lbfgs_iters;
    if (beta_form) c.beta = *beta_form == "transcribed" ? BetaForm::transcribed : BetaForm::standard;
    if (no_aux) c.no_aux = true;
    if (plain_mlp) c.plain_mlp = true;
    c.threads = threads ? *threads : default_thread_count();
    c.validate();
    return c;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"meshpinn: structured mesh generation with a physics-informed network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cli::kToolVersion));

  // generate
  auto* gen = app.add_subcommand("generate", "generate a mesh for a geometry");
  cli::GenerateOptions gopt;
  std::string method = "pinn";
  std::string manifest_path;
  std::string init = "tfi";
  TrainFlags gflags;
  gen->add_option("geometry", gopt.geometry_path, "geometry JSON")->check(CLI::ExistingFile);
  gen->add_option("--method", method, "pinn, tfi or elliptic")
      ->check(CLI::IsMember({"pinn", "tfi", "elliptic"}));
  gen->add_option("--ni", gopt.ni, "nodes along xi");
  gen->add_option("--nj", gopt.nj, "nodes along eta");
  gen->add_option("--format", gopt.formats, "output formats (vtk, p3d, svg)")
      ->check(CLI::IsMember({"vtk", "p3d", "svg"}));
  gen->add_option("-o,--out", gopt.out_dir, "output directory");
  gen->add_flag("--snap-boundary", gopt.snap_boundary, "overwrite PINN border nodes with the fit");
  gen->add_option("--iterations", gopt.elliptic_iterations, "elliptic sweeps");
  gen->add_option("--init", init, "elliptic initial interior")->check(CLI::IsMember({"zero", "tfi"}));
  gen->add_option("--omega", gopt.omega, "elliptic SOR relaxation factor");
  gen->add_option("--svg-width", gopt.svg_width, "SVG width in pixels");
  gen->add_option("--manifest", manifest_path, "replay the options recorded in a manifest")
      ->check(CLI::ExistingFile);
  gflags.attach(*gen, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "train a grid of architectures and tabulate losses");
  cli::SweepOptions sopt;
  TrainFlags sflags;
  sweep->add_option("geometry", sopt.geometry_path, "geometry JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--layers", sopt.layers, "hidden layer counts")->required();
  sweep->add_option("--neurons", sopt.neurons, "neuron counts")->required();
  sweep->add_option("--seeds", sopt.seeds, "seeds");
  sweep->add_option("-o,--out", sopt.out_csv, "CSV file (appended)")->required();
  sflags.attach(*sweep, false);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "quality report for a .vtk or .p3d mesh");
  std::string mesh_path, json_out, hist_out;
  eval->add_option("mesh", mesh_path, "mesh file")->required()->check(CLI::ExistingFile);
  eval->add_option("--json", json_out, "write the report as JSON");
  eval->add_option("--histogram", hist_out, "write the histogram as CSV");

  // fit-boundary
  auto* fitb = app.add_subcommand("fit-boundary", "dump the fitted boundary curves as CSV");
  std::string fit_geom, fit_out;
  int fit_samples = 101;
  TrainConfig fit_defaults;
  fitb->add_option("geometry", fit_geom, "geometry JSON")->required()->check(CLI::ExistingFile);
  fitb->add_option("--samples", fit_samples, "samples per side");
  fitb->add_option("--max-depth", fit_defaults.fit_max_depth, "regression tree depth cap");
  fitb->add_option("--min-leaf", fit_defaults.fit_min_leaf, "minimum samples per leaf");
  fitb->add_option("-o,--out", fit_out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*gen) {
    if (!manifest_path.empty()) {
      const auto doc = io::parse_json(io::read_file(manifest_path), manifest_path);
      auto replay = cli::options_from_manifest(doc);
      replay.out_dir = gopt.out_dir;
      replay.config.threads = gflags.threads ? *gflags.threads : default_thread_count();
      gopt = std::move(replay);
    } else {
      if (gopt.geometry_path.empty()) throw InputError("generate: a geometry file is required");
      gopt.method = cli::parse_method(method);
      gopt.elliptic_init = init == "zero" ? EllipticInit::zero : EllipticInit::tfi;
      gopt.config = gflags.resolve();
    }
    const auto res = cli::run_generate(gopt);
    std::cout << io::report_table(res.report);
    for (const auto& p : res.outputs) std::cout << "wrote " << p << "\n";
  } else if (*sweep) {
    sopt.config = sflags.resolve();
    cli::run_sweep(sopt, [](const std::string& row) { std::cout << row << std::flush; });
  } else if (*eval) {
    const auto report = evaluate_mesh(cli::load_mesh(mesh_path));
    std::cout << io::report_table(report);
    if (!json_out.empty()) io::write_file_atomic(json_out, io::report_to_json(report).dump(2) + "\n");
    if (!hist_out.empty()) io::write_file_atomic(hist_out, io::report_histogram_csv(report));
  } else if (*fitb) {
    const auto csv = cli::fit_boundary_csv(io::load_geometry(fit_geom), fit_samples,
                                           fit_defaults.fit_max_depth, fit_defaults.fit_min_leaf);
    if (fit_out.empty()) {
      std::cout << csv;
    } else {
      io::write_file_atomic(fit_out, csv);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const meshpinn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
