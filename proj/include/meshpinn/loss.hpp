#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"
#include "meshpinn/jet.hpp"
#include "meshpinn/network.hpp"
#include "meshpinn/parallel.hpp"

namespace meshpinn {

// ---------------------------------------------------------------------------
// Winslow residuals

/// `standard` uses beta = x_xi x_eta + y_xi y_eta. `transcribed` reproduces the
/// printed variant beta = x_xi x_eta + y_xi x_eta, kept for fidelity runs only.
enum class BetaForm { standard, transcribed };

struct WinslowCoeffs {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

inline WinslowCoeffs winslow_coeffs(const Jet2& xj, const Jet2& yj,
                                    BetaForm form = BetaForm::standard) {
  WinslowCoeffs c;
  c.alpha = xj.d_eta * xj.d_eta + yj.d_eta * yj.d_eta;
  c.beta = form == BetaForm::standard ? xj.d_xi * xj.d_eta + yj.d_xi * yj.d_eta
                                      : xj.d_xi * xj.d_eta + yj.d_xi * xj.d_eta;
  c.gamma = xj.d_xi * xj.d_xi + yj.d_xi * yj.d_xi;
  return c;
}

inline std::pair<double, double> residual_eqns(const Jet2& xj, const Jet2& yj,
                                               BetaForm form = BetaForm::standard) {
  const auto c = winslow_coeffs(xj, yj, form);
  return {c.alpha * xj.d_xixi - 2.0 * c.beta * xj.d_xieta + c.gamma * xj.d_etaeta,
          c.alpha * yj.d_xixi - 2.0 * c.beta * yj.d_xieta + c.gamma * yj.d_etaeta};
}

/// e1^2 + e2^2 at one point, and its adjoint with respect to both jets
/// (scaled by `weight`).
inline double eqns_point(const Jet2& xj, const Jet2& yj, BetaForm form, double weight, Jet2& xbar,
                         Jet2& ybar) {
  const auto c = winslow_coeffs(xj, yj, form);
  const double e1 = c.alpha * xj.d_xixi - 2.0 * c.beta * xj.d_xieta + c.gamma * xj.d_etaeta;
  const double e2 = c.alpha * yj.d_xixi - 2.0 * c.beta * yj.d_xieta + c.gamma * yj.d_etaeta;
  const double E1 = 2.0 * e1 * weight;
  const double E2 = 2.0 * e2 * weight;

  const double abar = E1 * xj.d_xixi + E2 * yj.d_xixi;
  const double bbar = -2.0 * (E1 * xj.d_xieta + E2 * yj.d_xieta);
  const double gbar = E1 * xj.d_etaeta + E2 * yj.d_etaeta;

  xbar = Jet2{};
  ybar = Jet2{};
  xbar.d_xixi = E1 * c.alpha;
  xbar.d_xieta = -2.0 * c.beta * E1;
  xbar.d_etaeta = E1 * c.gamma;
  ybar.d_xixi = E2 * c.alpha;
  ybar.d_xieta = -2.0 * c.beta * E2;
  ybar.d_etaeta = E2 * c.gamma;

  xbar.d_eta += 2.0 * abar * xj.d_eta;
  ybar.d_eta += 2.0 * abar * yj.d_eta;
  if (form == BetaForm::standard) {
    xbar.d_xi += bbar * xj.d_eta;
    xbar.d_eta += bbar * xj.d_xi;
    ybar.d_xi += bbar * yj.d_eta;
    ybar.d_eta += bbar * yj.d_xi;
  } else {
    xbar.d_xi += bbar * xj.d_eta;
    xbar.d_eta += bbar * (xj.d_xi + yj.d_xi);
    ybar.d_xi += bbar * xj.d_eta;
  }
  xbar.d_xi += 2.0 * gbar * xj.d_xi;
  ybar.d_xi += 2.0 * gbar * yj.d_xi;
  return e1 * e1 + e2 * e2;
}

// ---------------------------------------------------------------------------
// Batches and loss values

struct CompPoint {
  double xi = 0.0;
  double eta = 0.0;

  friend constexpr bool operator==(const CompPoint&, const CompPoint&) = default;
};

struct Batch {
  std::vector<CompPoint> interior;
  std::array<std::vector<TrainingPoint>, 4> boundary;  // indexed by Side
  std::vector<TrainingPoint> aux;

  std::vector<TrainingPoint>& side(Side s) { return boundary.at(static_cast<std::size_t>(s)); }
  const std::vector<TrainingPoint>& side(Side s) const {
    return boundary.at(static_cast<std::size_t>(s));
  }
};

struct LossBreakdown {
  double eqns = 0.0;
  double bcs_bottom = 0.0;
  double bcs_top = 0.0;
  double bcs_left = 0.0;
  double bcs_right = 0.0;
  double data = 0.0;
  double lambda1 = 1.0;
  double lambda2 = 10.0;
  double total = 0.0;

  double bcs() const { return bcs_bottom + bcs_top + bcs_left + bcs_right; }

  double& bcs_side(Side s) {
    switch (s) {
      case Side::bottom: return bcs_bottom;
      case Side::top: return bcs_top;
      case Side::left: return bcs_left;
      default: return bcs_right;
    }
  }

  void assemble() { total = eqns + lambda1 * bcs() + lambda2 * data; }

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct LossOptions {
  BetaForm beta = BetaForm::standard;
  int threads = 1;
};

/// Per-term values and parameter gradients of one batch evaluation.
struct LossEvaluation {
  LossBreakdown values;
  std::vector<double> grad_eqns;
  std::vector<double> grad_bcs;  // all four sides
  std::vector<double> grad_data;

  /// Gradient of values.total.
  std::vector<double> grad_total() const {
    std::vector<double> g(grad_eqns.size());
    for (std::size_t k = 0; k < g.size(); ++k)
      g[k] = grad_eqns[k] + values.lambda1 * grad_bcs[k] + values.lambda2 * grad_data[k];
    return g;
  }
};

namespace detail {

inline constexpr std::size_t kChunkPoints = 32;

enum class TermKind { eqns, bcs, data };

struct Chunk {
  TermKind kind = TermKind::eqns;
  Side side = Side::bottom;
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline std::vector<Chunk> make_chunks(const Batch& batch) {
  std::vector<Chunk> chunks;
  auto split = [&](TermKind kind, Side side, std::size_t n) {
    for (std::size_t b = 0; b < n; b += kChunkPoints)
      chunks.push_back({kind, side, b, std::min(n, b + kChunkPoints)});
  };
  split(TermKind::eqns, Side::bottom, batch.interior.size());
  for (Side s : kBoundarySides) split(TermKind::bcs, s, batch.side(s).size());
  split(TermKind::data, Side::auxiliary, batch.aux.size());
  return chunks;
}

struct Workspace {
  SubNetTape<Jet2> jx, jy;
  SubNetTape<double> dx, dy;
};

/// Sum of squared mismatches over points [begin, end); adds the gradient to
/// `grad` when non-empty.
inline double value_chunk(const MeshNetParams& params, std::span<const TrainingPoint> pts,
                          Workspace& ws, std::span<double> grad) {
  const auto& lay = params.layout();
  const std::size_t n = params.sub_size();
  double sum = 0.0;
  for (const auto& p : pts) {
    const double x = subnet_forward(lay, params.sub(0), p.xi, p.eta, ws.dx);
    const double y = subnet_forward(lay, params.sub(1), p.xi, p.eta, ws.dy);
    const double rx = x - p.x;
    const double ry = y - p.y;
    sum += rx * rx + ry * ry;
    if (!grad.empty()) {
      subnet_backward(lay, params.sub(0), ws.dx, 2.0 * rx, grad.subspan(0, n));
      subnet_backward(lay, params.sub(1), ws.dy, 2.0 * ry, grad.subspan(n, n));
    }
  }
  return sum;
}

inline double eqns_chunk(const MeshNetParams& params, std::span<const CompPoint> pts,
                         BetaForm form, Workspace& ws, std::span<double> grad) {
  const auto& lay = params.layout();
  const std::size_t n = params.sub_size();
  double sum = 0.0;
  for (const auto& p : pts) {
    const Jet2 xj = subnet_forward(lay, params.sub(0), p.xi, p.eta, ws.jx);
    const Jet2 yj = subnet_forward(lay, params.sub(1), p.xi, p.eta, ws.jy);
    Jet2 xbar;
    Jet2 ybar;
    sum += eqns_point(xj, yj, form, 1.0, xbar, ybar);
    if (!grad.empty()) {
      subnet_backward(lay, params.sub(0), ws.jx, xbar, grad.subspan(0, n));
      subnet_backward(lay, params.sub(1), ws.jy, ybar, grad.subspan(n, n));
    }
  }
  return sum;
}

}  // namespace detail

/// Evaluates every loss term on `batch` in a fixed summation order (chunks of
/// 32 points, reduced in chunk order), so results do not depend on the
/// thread count. Gradients are computed only when `with_gradient` is set.
inline LossEvaluation evaluate_loss(const MeshNetParams& params, const Batch& batch,
                                    double lambda1, double lambda2, bool with_gradient,
                                    const LossOptions& opts = {}) {
  if (batch.interior.empty()) throw EmptyBatch("no interior points in batch");
  for (Side s : kBoundarySides)
    if (batch.side(s).empty())
      throw EmptyBatch("no boundary points on side " + std::string(to_string(s)));

  const auto chunks = detail::make_chunks(batch);
  const std::size_t np = params.size();
  std::vector<double> partial(chunks.size(), 0.0);
  std::vector<std::vector<double>> grads(with_gradient ? chunks.size() : 0);
  const int threads = std::max(1, opts.threads);
  std::vector<detail::Workspace> ws(static_cast<std::size_t>(threads));

  run_chunks(chunks.size(), threads, [&](std::size_t c, std::size_t worker) {
    const auto& ch = chunks[c];
    std::span<double> g;
    if (with_gradient) {
      grads[c].assign(np, 0.0);
      g = grads[c];
    }
    switch (ch.kind) {
      case detail::TermKind::eqns:
        partial[c] = detail::eqns_chunk(
            params, std::span(batch.interior).subspan(ch.begin, ch.end - ch.begin), opts.beta,
            ws[worker], g);
        break;
      case detail::TermKind::bcs:
        partial[c] = detail::value_chunk(
            params, std::span(batch.side(ch.side)).subspan(ch.begin, ch.end - ch.begin),
            ws[worker], g);
        break;
      case detail::TermKind::data:
        partial[c] = detail::value_chunk(
            params, std::span(batch.aux).subspan(ch.begin, ch.end - ch.begin), ws[worker], g);
        break;
    }
  });

  LossEvaluation out;
  out.values.lambda1 = lambda1;
  out.values.lambda2 = lambda2;
  if (with_gradient) {
    out.grad_eqns.assign(np, 0.0);
    out.grad_bcs.assign(np, 0.0);
    out.grad_data.assign(np, 0.0);
  }
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const auto& ch = chunks[c];
    std::vector<double>* target = nullptr;
    switch (ch.kind) {
      case detail::TermKind::eqns:
        out.values.eqns += partial[c];
        target = &out.grad_eqns;
        break;
      case detail::TermKind::bcs:
        out.values.bcs_side(ch.side) += partial[c];
        target = &out.grad_bcs;
        break;
      case detail::TermKind::data:
        out.values.data += partial[c];
        target = &out.grad_data;
        break;
    }
    if (with_gradient) {
      auto& dst = *target;
      for (std::size_t k = 0; k < np; ++k) dst[k] += grads[c][k];
    }
  }
  out.values.assemble();
  if (!std::isfinite(out.values.total)) throw NonFiniteLoss("loss evaluated to a non-finite value");
  return out;
}

inline LossBreakdown total_loss(const MeshNetParams& params, const Batch& batch, double lambda1,
                                double lambda2, const LossOptions& opts = {}) {
  return evaluate_loss(params, batch, lambda1, lambda2, false, opts).values;
}

inline double loss_eqns(const MeshNetParams& params, std::span<const CompPoint> interior,
                        BetaForm form = BetaForm::standard) {
  if (interior.empty()) throw EmptyBatch("no interior points");
  detail::Workspace ws;
  double sum = 0.0;
  for (std::size_t b = 0; b < interior.size(); b += detail::kChunkPoints) {
    const auto len = std::min(detail::kChunkPoints, interior.size() - b);
    sum += detail::eqns_chunk(params, interior.subspan(b, len), form, ws, {});
  }
  return sum;
}

inline double squared_mismatch(const MeshNetParams& params, std::span<const TrainingPoint> pts) {
  detail::Workspace ws;
  double sum = 0.0;
  for (std::size_t b = 0; b < pts.size(); b += detail::kChunkPoints) {
    const auto len = std::min(detail::kChunkPoints, pts.size() - b);
    sum += detail::value_chunk(params, pts.subspan(b, len), ws, {});
  }
  return sum;
}

inline std::array<double, 4> loss_bcs(const MeshNetParams& params,
                                      const std::array<std::vector<TrainingPoint>, 4>& boundary) {
  std::array<double, 4> out{};
  for (Side s : kBoundarySides) {
    const auto& pts = boundary[static_cast<std::size_t>(s)];
    if (pts.empty()) throw EmptyBatch("no boundary points on side " + std::string(to_string(s)));
    out[static_cast<std::size_t>(s)] = squared_mismatch(params, pts);
  }
  return out;
}

inline double loss_data(const MeshNetParams& params, std::span<const TrainingPoint> aux) {
  return aux.empty() ? 0.0 : squared_mismatch(params, aux);
}

// ---------------------------------------------------------------------------
// Dynamic boundary weight

inline constexpr double kLambdaAveraging = 0.1;

/// lambda_hat = max|grad_eqns| / mean|grad_bcs|, blended into the previous
/// value with weight `rate`. A vanishing boundary gradient keeps the old value.
inline double update_lambda1(std::span<const double> grad_eqns, std::span<const double> grad_bcs,
                             double lambda1_old, double rate = kLambdaAveraging) {
  if (grad_eqns.size() != grad_bcs.size() || grad_bcs.empty())
    throw InputError("update_lambda1: gradient lengths differ");
  double max_eqns = 0.0;
  for (double g : grad_eqns) max_eqns = std::max(max_eqns, std::abs(g));
  double mean_bcs = 0.0;
  for (double g : grad_bcs) mean_bcs += std::abs(g);
  mean_bcs /= static_cast<double>(grad_bcs.size());
  if (mean_bcs < 1e-12) return lambda1_old;
  const double lambda_hat = max_eqns / mean_bcs;
  return (1.0 - rate) * lambda1_old + rate * lambda_hat;
}

}  // namespace meshpinn
