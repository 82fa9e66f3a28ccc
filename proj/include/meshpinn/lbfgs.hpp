#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "meshpinn/errors.hpp"

namespace meshpinn {

/// Returns f(x) and writes grad f(x) into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 5000;
  double tol_grad = 1e-8;   // on the max-norm of the gradient
  double tol_loss = 1e-12;  // on (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)
  double c1 = 1e-4;
  double c2 = 0.9;
  double curvature_eps = 1e-10;
  int max_line_search = 25;
};

enum class LbfgsStatus { converged_grad, converged_loss, max_iters, line_search_failed };

constexpr std::string_view to_string(LbfgsStatus s) {
  switch (s) {
    case LbfgsStatus::converged_grad: return "converged_grad";
    case LbfgsStatus::converged_loss: return "converged_loss";
    case LbfgsStatus::max_iters: return "max_iters";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "?";
}

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iters;
  std::vector<double> history;  // f at x0, then after every accepted iteration
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db),
/// safeguarded into the inner 80% of the bracket.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  const double width = hi - lo;
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) t = b - (b - a) * (db + d2 - d1) / denom;
  }
  if (!std::isfinite(t) || t < lo + 0.1 * width || t > hi - 0.1 * width) t = 0.5 * (a + b);
  return t;
}

struct LineSearchPoint {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;
  std::vector<double> x;
  std::vector<double> g;
};

/// Strong-Wolfe line search (bracketing + zoom). On failure returns false and
/// leaves the lowest point seen in `best`.
inline bool strong_wolfe(const Objective& fn, std::span<const double> x0, double f0,
                         std::span<const double> dir, double slope0, double step0,
                         const LbfgsOptions& opt, int& evals, LineSearchPoint& out,
                         LineSearchPoint& best) {
  const std::size_t n = x0.size();
  auto eval = [&](double step) {
    LineSearchPoint p;
    p.step = step;
    p.x.resize(n);
    p.g.resize(n);
    for (std::size_t k = 0; k < n; ++k) p.x[k] = x0[k] + step * dir[k];
    p.f = fn(p.x, p.g);
    ++evals;
    p.slope = dot(p.g, dir);
    if (std::isfinite(p.f) && (best.x.empty() || p.f < best.f)) best = p;
    return p;
  };
  auto armijo_ok = [&](const LineSearchPoint& p) {
    return std::isfinite(p.f) && p.f <= f0 + opt.c1 * p.step * slope0;
  };
  auto curvature_ok = [&](const LineSearchPoint& p) {
    return std::abs(p.slope) <= -opt.c2 * slope0;
  };

  auto zoom = [&](LineSearchPoint lo, LineSearchPoint hi, int budget) {
    for (int it = 0; it < budget; ++it) {
      double step;
      if (std::isfinite(hi.f) && std::isfinite(hi.slope)) {
        step = cubic_step(lo.step, lo.f, lo.slope, hi.step, hi.f, hi.slope);
      } else {
        step = 0.5 * (lo.step + hi.step);
      }
      if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) return false;
      auto p = eval(step);
      if (!armijo_ok(p) || p.f >= lo.f) {
        hi = std::move(p);
      } else {
        if (curvature_ok(p)) {
          out = std::move(p);
          return true;
        }
        if (p.slope * (hi.step - lo.step) >= 0.0) hi = lo;
        lo = std::move(p);
      }
    }
    return false;
  };

  LineSearchPoint prev;
  prev.step = 0.0;
  prev.f = f0;
  prev.slope = slope0;
  double step = step0;
  for (int it = 0; it < opt.max_line_search; ++it) {
    auto p = eval(step);
    if (!armijo_ok(p) || (it > 0 && p.f >= prev.f)) {
      return zoom(std::move(prev), std::move(p), opt.max_line_search);
    }
    if (curvature_ok(p)) {
      out = std::move(p);
      return true;
    }
    if (p.slope >= 0.0) return zoom(std::move(p), std::move(prev), opt.max_line_search);
    prev = std::move(p);
    step *= 2.0;
  }
  return false;
}

}  // namespace detail

/// Unconstrained limited-memory BFGS (two-loop recursion, strong-Wolfe line
/// search). `on_iteration(iter, x, f)` runs after every accepted step.
inline LbfgsResult lbfgs_minimize(
    const Objective& fn, std::vector<double> x0, const LbfgsOptions& opt = {},
    const std::function<void(int, std::span<const double>, double)>& on_iteration = {}) {
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n);
  res.f = fn(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) throw NonFiniteLoss("lbfgs: non-finite objective at the start point");
  res.history.push_back(res.f);
  if (detail::max_abs(g) <= opt.tol_grad) {
    res.status = LbfgsStatus::converged_grad;
    return res;
  }

  std::deque<std::vector<double>> s_mem;
  std::deque<std::vector<double>> y_mem;
  std::deque<double> rho_mem;
  std::vector<double> dir(n);
  std::vector<double> alpha(static_cast<std::size_t>(std::max(opt.memory, 1)));

  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    // two-loop recursion: dir = -H g
    for (std::size_t k = 0; k < n; ++k) dir[k] = -g[k];
    const std::size_t m = s_mem.size();
    for (std::size_t i = m; i-- > 0;) {
      alpha[i] = rho_mem[i] * detail::dot(s_mem[i], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] -= alpha[i] * y_mem[i][k];
    }
    double step0 = 1.0;
    if (m > 0) {
      const double gamma = detail::dot(s_mem.back(), y_mem.back()) /
                           detail::dot(y_mem.back(), y_mem.back());
      for (double& d : dir) d *= gamma;
    } else {
      step0 = std::min(1.0, 1.0 / detail::max_abs(g));
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double beta = rho_mem[i] * detail::dot(y_mem[i], dir);
      for (std::size_t k = 0; k < n; ++k) dir[k] += s_mem[i][k] * (alpha[i] - beta);
    }
    double slope = detail::dot(g, dir);
    if (!(slope < 0.0)) {
      s_mem.clear();
      y_mem.clear();
      rho_mem.clear();
      for (std::size_t k = 0; k < n; ++k) dir[k] = -g[k];
      slope = detail::dot(g, dir);
      step0 = std::min(1.0, 1.0 / detail::max_abs(g));
    }

    detail::LineSearchPoint accepted;
    detail::LineSearchPoint best;
    const bool ok =
        detail::strong_wolfe(fn, res.x, res.f, dir, slope, step0, opt, res.evaluations, accepted, best);
    if (!ok) {
      if (!best.x.empty() && best.f < res.f) {
        res.x = std::move(best.x);
        res.f = best.f;
        res.iterations = iter;
        res.history.push_back(res.f);
        if (on_iteration) on_iteration(iter, res.x, res.f);
      }
      res.status = LbfgsStatus::line_search_failed;
      return res;
    }

    std::vector<double> s(n);
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = accepted.x[k] - res.x[k];
      y[k] = accepted.g[k] - g[k];
    }
    const double sy = detail::dot(s, y);
    if (sy > opt.curvature_eps) {
      if (static_cast<int>(s_mem.size()) >= opt.memory) {
        s_mem.pop_front();
        y_mem.pop_front();
        rho_mem.pop_front();
      }
      s_mem.push_back(std::move(s));
      y_mem.push_back(std::move(y));
      rho_mem.push_back(1.0 / sy);
    }

    const double f_old = res.f;
    res.x = std::move(accepted.x);
    g = std::move(accepted.g);
    res.f = accepted.f;
    res.iterations = iter;
    res.history.push_back(res.f);
    if (on_iteration) on_iteration(iter, res.x, res.f);

    if (detail::max_abs(g) <= opt.tol_grad) {
      res.status = LbfgsStatus::converged_grad;
      return res;
    }
    const double scale = std::max({std::abs(f_old), std::abs(res.f), 1.0});
    if ((f_old - res.f) / scale <= opt.tol_loss) {
      res.status = LbfgsStatus::converged_loss;
      return res;
    }
  }
  res.status = LbfgsStatus::max_iters;
  return res;
}

}  // namespace meshpinn
