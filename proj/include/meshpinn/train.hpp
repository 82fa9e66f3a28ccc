#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"
#include "meshpinn/lbfgs.hpp"
#include "meshpinn/loss.hpp"
#include "meshpinn/network.hpp"
#include "meshpinn/optim.hpp"
#include "meshpinn/parallel.hpp"
#include "meshpinn/rng.hpp"

namespace meshpinn {

struct TrainConfig {
  int layers = kDefaultLayers;
  int neurons = kDefaultNeurons;

  int adam_epochs = 5000;
  int adam_batch_interior = 100;
  int bcs_per_side = 25;
  int aux_points = 50;
  double lr0 = 1e-3;
  double lr_decay = 0.9;
  int lr_step = 1000;

  int lbfgs_batch_interior = 1000;
  int lbfgs_bcs_per_side = 100;
  int lbfgs_aux_points = 200;
  int lbfgs_max_iters = 5000;
  int lbfgs_memory = 10;
  double lbfgs_tol_grad = 1e-8;
  double lbfgs_tol_loss = 1e-12;

  double lambda1_init = 1.0;
  double lambda2 = 10.0;
  bool dynamic_lambda1 = true;
  int lambda1_interval = 10;
  double lambda1_rate = 0.1;

  std::uint64_t seed = 0;
  bool no_aux = false;
  bool plain_mlp = false;
  BetaForm beta = BetaForm::standard;
  int fit_max_depth = kDefaultTreeDepth;
  int fit_min_leaf = kDefaultMinLeaf;
  int threads = 1;  // execution only; results do not depend on it

  Architecture architecture() const {
    return plain_mlp ? Architecture::plain : Architecture::gated;
  }

  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v < 1) throw InputError(std::string("config: ") + name + " must be >= 1");
    };
    positive(layers, "layers");
    positive(neurons, "neurons");
    positive(adam_batch_interior, "adam_batch_interior");
    positive(bcs_per_side, "bcs_per_side");
    positive(aux_points, "aux_points");
    positive(lbfgs_batch_interior, "lbfgs_batch_interior");
    positive(lbfgs_bcs_per_side, "lbfgs_bcs_per_side");
    positive(lbfgs_aux_points, "lbfgs_aux_points");
    positive(lbfgs_memory, "lbfgs_memory");
    positive(lr_step, "lr_step");
    positive(lambda1_interval, "lambda1_interval");
    positive(fit_min_leaf, "fit_min_leaf");
    if (adam_epochs < 0) throw InputError("config: adam_epochs must be >= 0");
    if (lbfgs_max_iters < 0) throw InputError("config: lbfgs_max_iters must be >= 0");
    if (fit_max_depth < 0) throw InputError("config: fit_max_depth must be >= 0");
    if (!(lr0 > 0.0)) throw InputError("config: lr0 must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InputError("config: lr_decay must be in (0,1]");
    if (!(lambda1_init > 0.0)) throw InputError("config: lambda1_init must be > 0");
    if (!(lambda2 >= 0.0)) throw InputError("config: lambda2 must be >= 0");
    if (!(lambda1_rate > 0.0 && lambda1_rate <= 1.0))
      throw InputError("config: lambda1_rate must be in (0,1]");
  }
};

enum class Stage { adam, lbfgs };

constexpr std::string_view to_string(Stage s) { return s == Stage::adam ? "adam" : "lbfgs"; }

struct HistoryRecord {
  Stage stage = Stage::adam;
  int epoch = 0;
  double lr = 0.0;
  LossBreakdown loss;
};

struct TrainHistory {
  std::vector<HistoryRecord> records;
  LbfgsStatus lbfgs_status = LbfgsStatus::max_iters;

  /// Last Adam record (loss on that epoch's batch, before its step).
  const HistoryRecord* adam_last() const {
    const HistoryRecord* r = nullptr;
    for (const auto& rec : records)
      if (rec.stage == Stage::adam) r = &rec;
    return r;
  }
  const HistoryRecord* lbfgs_first() const {
    for (const auto& rec : records)
      if (rec.stage == Stage::lbfgs) return &rec;
    return nullptr;
  }
  const HistoryRecord* final_record() const { return records.empty() ? nullptr : &records.back(); }
};

struct TrainResult {
  MeshNetParams params;
  TrainHistory history;
};

/// One seeded batch. Auxiliary points are split evenly across lines (earlier
/// lines take the remainder); `include_aux = false` leaves the aux set empty.
inline Batch sample_batch(const GeometrySpec& spec, const BoundaryFit& fit, int n_interior,
                          int n_bcs, int n_aux, bool include_aux, std::uint64_t seed) {
  Batch b;
  Rng rng(mix_seed(seed, 0));
  b.interior.reserve(static_cast<std::size_t>(n_interior));
  for (int k = 0; k < n_interior; ++k) {
    const double xi = rng.uniform_open();
    const double eta = rng.uniform_open();
    b.interior.push_back({xi, eta});
  }
  for (Side s : kBoundarySides)
    b.side(s) = sample_boundary(fit, s, n_bcs, mix_seed(seed, 1 + static_cast<std::uint64_t>(s)));
  if (include_aux && !spec.aux_lines.empty()) {
    const auto lines = static_cast<int>(spec.aux_lines.size());
    for (int a = 0; a < lines; ++a) {
      const int count = n_aux / lines + (a < n_aux % lines ? 1 : 0);
      if (count == 0) continue;
      auto pts = sample_auxiliary(spec.aux_lines[static_cast<std::size_t>(a)], count,
                                  mix_seed(seed, 16 + static_cast<std::uint64_t>(a)));
      b.aux.insert(b.aux.end(), pts.begin(), pts.end());
    }
  }
  return b;
}

namespace detail {
inline constexpr std::uint64_t kInitTag = 0x1a1a;
inline constexpr std::uint64_t kLbfgsBatchTag = 0x1bf9;
inline constexpr std::uint64_t kAdamBatchTag = 0xada0;
}  // namespace detail

/// Adam over freshly sampled batches, then L-BFGS on one fixed batch with the
/// loss weights frozen. Deterministic for a fixed config.
inline TrainResult train(const GeometrySpec& spec, const BoundaryFit& fit, const TrainConfig& cfg) {
  cfg.validate();
  require_valid(spec);
  TrainResult result{init_params(cfg.layers, cfg.neurons, mix_seed(cfg.seed, detail::kInitTag),
                                 cfg.architecture()),
                     {}};
  auto& params = result.params;
  auto& history = result.history;
  const bool use_aux = !cfg.no_aux;
  LossOptions opts{cfg.beta, cfg.threads};
  double lambda1 = cfg.lambda1_init;

  AdamState adam(params.size());
  for (int epoch = 0; epoch < cfg.adam_epochs; ++epoch) {
    try {
      const auto batch = sample_batch(
          spec, fit, cfg.adam_batch_interior, cfg.bcs_per_side, cfg.aux_points, use_aux,
          mix_seed(mix_seed(cfg.seed, detail::kAdamBatchTag), static_cast<std::uint64_t>(epoch)));
      auto ev = evaluate_loss(params, batch, lambda1, cfg.lambda2, true, opts);
      if (cfg.dynamic_lambda1 && epoch % cfg.lambda1_interval == 0) {
        lambda1 = update_lambda1(ev.grad_eqns, ev.grad_bcs, lambda1, cfg.lambda1_rate);
        ev.values.lambda1 = lambda1;
        ev.values.assemble();
      }
      const double lr = lr_schedule(epoch, cfg.lr0, cfg.lr_decay, cfg.lr_step);
      history.records.push_back({Stage::adam, epoch, lr, ev.values});
      adam_step(adam, params.flat(), ev.grad_total(), lr);
    } catch (const NumericalError& e) {
      throw NonFiniteGradient("adam epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }

  if (cfg.lbfgs_max_iters > 0) {
    const auto batch =
        sample_batch(spec, fit, cfg.lbfgs_batch_interior, cfg.lbfgs_bcs_per_side,
                     cfg.lbfgs_aux_points, use_aux, mix_seed(cfg.seed, detail::kLbfgsBatchTag));
    const int base = cfg.adam_epochs;
    std::vector<LossBreakdown> recent;  // breakdowns of the latest evaluations
    Objective objective = [&](std::span<const double> x, std::span<double> grad) {
      MeshNetParams trial(params.layers(), params.neurons(), params.architecture(),
                          std::vector<double>(x.begin(), x.end()));
      auto ev = evaluate_loss(trial, batch, lambda1, cfg.lambda2, true, opts);
      const auto g = ev.grad_total();
      std::copy(g.begin(), g.end(), grad.begin());
      if (recent.size() >= 64) recent.erase(recent.begin());
      recent.push_back(ev.values);
      return ev.values.total;
    };
    auto lookup = [&](double f) {
      for (auto it = recent.rbegin(); it != recent.rend(); ++it)
        if (it->total == f) return *it;
      return recent.back();
    };

    LbfgsOptions lo;
    lo.memory = cfg.lbfgs_memory;
    lo.max_iters = cfg.lbfgs_max_iters;
    lo.tol_grad = cfg.lbfgs_tol_grad;
    lo.tol_loss = cfg.lbfgs_tol_loss;
    std::vector<double> x0(params.flat().begin(), params.flat().end());
    try {
      bool first = true;
      auto on_iter = [&](int iter, std::span<const double>, double f) {
        history.records.push_back({Stage::lbfgs, base + iter, 0.0, lookup(f)});
      };
      Objective logged = [&](std::span<const double> x, std::span<double> grad) {
        const double f = objective(x, grad);
        if (first) {
          history.records.push_back({Stage::lbfgs, base, 0.0, recent.back()});
          first = false;
        }
        return f;
      };
      auto res = lbfgs_minimize(logged, std::move(x0), lo, on_iter);
      history.lbfgs_status = res.status;
      std::copy(res.x.begin(), res.x.end(), params.flat().begin());
    } catch (const NumericalError& e) {
      throw NonFiniteLoss("lbfgs stage: " + std::string(e.what()));
    }
  }
  return result;
}

}  // namespace meshpinn
