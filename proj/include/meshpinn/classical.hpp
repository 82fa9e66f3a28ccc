#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"
#include "meshpinn/mesh.hpp"

namespace meshpinn {

/// Boundary points at uniform computational spacing. bottom/top have ni
/// entries (xi = i/(ni-1)); left/right have nj entries (eta = j/(nj-1)).
struct BoundaryDiscretization {
  std::vector<Vec2> bottom;
  std::vector<Vec2> top;
  std::vector<Vec2> left;
  std::vector<Vec2> right;

  int ni() const { return static_cast<int>(bottom.size()); }
  int nj() const { return static_cast<int>(left.size()); }

  /// Throws InvalidGeometry unless sizes agree and the four corners close.
  void check() const {
    if (bottom.size() < 2 || left.size() < 2 || top.size() != bottom.size() ||
        right.size() != left.size())
      throw InvalidGeometry("boundary discretization: inconsistent side lengths");
    auto corner = [](std::string_view name, Vec2 a, Vec2 b) {
      if (distance(a, b) > kCornerTolerance)
        throw InvalidGeometry("boundary discretization: corner " + std::string(name) +
                              " does not close");
    };
    corner("bottom-left", bottom.front(), left.front());
    corner("bottom-right", bottom.back(), right.front());
    corner("top-left", top.front(), left.back());
    corner("top-right", top.back(), right.back());
  }
};

inline BoundaryDiscretization discretize_boundary(const BoundaryFit& fit, int ni, int nj) {
  if (ni < 2 || nj < 2) throw InputError("discretize_boundary: ni, nj must be >= 2");
  BoundaryDiscretization bd;
  for (int i = 0; i < ni; ++i) {
    const double xi = grid_coord(i, ni);
    bd.bottom.push_back(fit.side(Side::bottom)(xi));
    bd.top.push_back(fit.side(Side::top)(xi));
  }
  for (int j = 0; j < nj; ++j) {
    const double eta = grid_coord(j, nj);
    bd.left.push_back(fit.side(Side::left)(eta));
    bd.right.push_back(fit.side(Side::right)(eta));
  }
  return bd;
}

/// `transcribed` drops the eta factors on the top-left corner term and the
/// top edge term, as in one printed form of the formula. It does not
/// reproduce its boundaries and exists only to document that form.
enum class TfiForm { corrected, transcribed };

/// Bilinearly blended transfinite interpolation of the four sides.
inline StructuredMesh tfi(const BoundaryDiscretization& bd, TfiForm form = TfiForm::corrected) {
  bd.check();
  const int ni = bd.ni();
  const int nj = bd.nj();
  StructuredMesh mesh(ni, nj);
  const Vec2 b0 = bd.bottom.front();
  const Vec2 b1 = bd.bottom.back();
  const Vec2 t0 = bd.top.front();
  const Vec2 t1 = bd.top.back();
  for (int j = 0; j < nj; ++j) {
    const double eta = grid_coord(j, nj);
    for (int i = 0; i < ni; ++i) {
      const double xi = grid_coord(i, ni);
      const double top_w = form == TfiForm::corrected ? eta : 1.0;
      const double tl_w = form == TfiForm::corrected ? (1.0 - xi) * eta : (1.0 - xi);
      Vec2 r = (1.0 - xi) * bd.left[j] + xi * bd.right[j] + (1.0 - eta) * bd.bottom[i] +
               top_w * bd.top[i];
      r = r - (1.0 - xi) * (1.0 - eta) * b0 - tl_w * t0 - xi * (1.0 - eta) * b1 - xi * eta * t1;
      mesh(i, j) = r;
    }
  }
  if (form == TfiForm::corrected) {
    // Boundary nodes are copied so the border reproduces the input bit-exactly.
    for (int i = 0; i < ni; ++i) {
      mesh(i, 0) = bd.bottom[i];
      mesh(i, nj - 1) = bd.top[i];
    }
    for (int j = 0; j < nj; ++j) {
      mesh(0, j) = bd.left[j];
      mesh(ni - 1, j) = bd.right[j];
    }
  }
  return mesh;
}

enum class EllipticInit { zero, tfi };

struct EllipticResult {
  StructuredMesh mesh;
  std::vector<double> residual_history;  // max node update per sweep
};

/// SOR sweeps of the central-difference Winslow system with the metric
/// coefficients frozen at the start of each sweep. Boundary nodes are never
/// written. Where both coefficients vanish (e.g. next to an all-zero
/// interior) the node falls back to the Laplace stencil.
inline EllipticResult elliptic_smooth(const BoundaryDiscretization& bd, int iterations,
                                      EllipticInit init = EllipticInit::tfi, double omega = 1.5) {
  bd.check();
  if (iterations < 1) throw InputError("elliptic_smooth: iterations must be >= 1");
  if (!(omega > 0.0 && omega < 2.0)) throw InputError("elliptic_smooth: omega must be in (0,2)");
  const int ni = bd.ni();
  const int nj = bd.nj();

  EllipticResult res;
  res.mesh = tfi(bd);
  auto& m = res.mesh;
  if (init == EllipticInit::zero) {
    for (int j = 1; j < nj - 1; ++j)
      for (int i = 1; i < ni - 1; ++i) m(i, j) = {0.0, 0.0};
  }

  const double hx = 1.0 / (ni - 1);
  const double he = 1.0 / (nj - 1);
  const auto interior = static_cast<std::size_t>(std::max(0, ni - 2) * std::max(0, nj - 2));
  std::vector<double> ca(interior), cb(interior), cg(interior);
  auto at = [&](int i, int j) { return static_cast<std::size_t>((j - 1) * (ni - 2) + (i - 1)); };

  res.residual_history.reserve(static_cast<std::size_t>(iterations));
  for (int sweep = 0; sweep < iterations; ++sweep) {
    for (int j = 1; j < nj - 1; ++j) {
      for (int i = 1; i < ni - 1; ++i) {
        const Vec2 dxi = (0.5 / hx) * (m(i + 1, j) - m(i - 1, j));
        const Vec2 deta = (0.5 / he) * (m(i, j + 1) - m(i, j - 1));
        ca[at(i, j)] = deta.x * deta.x + deta.y * deta.y;
        cb[at(i, j)] = dxi.x * deta.x + dxi.y * deta.y;
        cg[at(i, j)] = dxi.x * dxi.x + dxi.y * dxi.y;
      }
    }
    double max_update = 0.0;
    for (int j = 1; j < nj - 1; ++j) {
      for (int i = 1; i < ni - 1; ++i) {
        double a = ca[at(i, j)] / (hx * hx);
        double g = cg[at(i, j)] / (he * he);
        double b = cb[at(i, j)];
        if (!(a + g > 1e-300)) {
          a = 1.0 / (hx * hx);
          g = 1.0 / (he * he);
          b = 0.0;
        }
        const Vec2 cross = (0.25 / (hx * he)) *
                           (m(i + 1, j + 1) - m(i + 1, j - 1) - m(i - 1, j + 1) + m(i - 1, j - 1));
        const Vec2 gs = (1.0 / (2.0 * (a + g))) *
                        (a * (m(i + 1, j) + m(i - 1, j)) + g * (m(i, j + 1) + m(i, j - 1)) -
                         2.0 * b * cross);
        const Vec2 old = m(i, j);
        const Vec2 next = old + omega * (gs - old);
        if (!std::isfinite(next.x) || !std::isfinite(next.y))
          throw DivergedIteration("elliptic_smooth diverged at sweep " + std::to_string(sweep),
                                  sweep);
        max_update = std::max({max_update, std::abs(next.x - old.x), std::abs(next.y - old.y)});
        m(i, j) = next;
      }
    }
    res.residual_history.push_back(max_update);
  }
  return res;
}

}  // namespace meshpinn
