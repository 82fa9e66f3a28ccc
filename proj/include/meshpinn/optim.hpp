#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meshpinn/errors.hpp"

namespace meshpinn {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Step-decayed learning rate: lr0 * decay^floor(epoch / step).
inline double lr_schedule(int epoch, double lr0 = 1e-3, double decay = 0.9, int step = 1000) {
  if (epoch < 0) throw InputError("lr_schedule: negative epoch");
  return lr0 * std::pow(decay, epoch / step);
}

/// Bias-corrected Adam update of `params` in place.
inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
                      double lr) {
  if (state.m.size() != params.size() || grad.size() != params.size())
    throw InputError("adam_step: shape mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw NonFiniteGradient("adam_step: non-finite gradient entry");
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grad[k];
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grad[k] * grad[k];
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    params[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace meshpinn
