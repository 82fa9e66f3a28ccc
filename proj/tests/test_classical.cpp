#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "meshpinn/classical.hpp"
#include "meshpinn/quality.hpp"
#include "test_shapes.hpp"

using namespace meshpinn;

namespace {

/// Exact boundary samples of the bilinear image of the unit square with
/// corners p00, p10, p01, p11.
BoundaryDiscretization bilinear_boundary(int ni, int nj, Vec2 p00, Vec2 p10, Vec2 p01, Vec2 p11) {
  auto at = [&](double xi, double eta) {
    return (1 - xi) * (1 - eta) * p00 + xi * (1 - eta) * p10 + (1 - xi) * eta * p01 +
           xi * eta * p11;
  };
  BoundaryDiscretization bd;
  for (int i = 0; i < ni; ++i) {
    bd.bottom.push_back(at(grid_coord(i, ni), 0.0));
    bd.top.push_back(at(grid_coord(i, ni), 1.0));
  }
  for (int j = 0; j < nj; ++j) {
    bd.left.push_back(at(0.0, grid_coord(j, nj)));
    bd.right.push_back(at(1.0, grid_coord(j, nj)));
  }
  return bd;
}

BoundaryDiscretization sine_boundary(int ni, int nj, double amp) {
  auto bd = bilinear_boundary(ni, nj, {0, 0}, {1, 0}, {0, 1}, {1, 1});
  for (int i = 1; i + 1 < ni; ++i) bd.bottom[i].y = amp * std::sin(std::numbers::pi * grid_coord(i, ni));
  return bd;
}

double max_deviation(const StructuredMesh& m, Vec2 p00, Vec2 p10, Vec2 p01, Vec2 p11) {
  double worst = 0.0;
  for (int j = 0; j < m.nj(); ++j) {
    for (int i = 0; i < m.ni(); ++i) {
      const double xi = grid_coord(i, m.ni()), eta = grid_coord(j, m.nj());
      const Vec2 want = (1 - xi) * (1 - eta) * p00 + xi * (1 - eta) * p10 + (1 - xi) * eta * p01 +
                        xi * eta * p11;
      worst = std::max({worst, std::abs(m(i, j).x - want.x), std::abs(m(i, j).y - want.y)});
    }
  }
  return worst;
}

}  // namespace

TEST(Discretize, UnitSquare) {
  const auto fit = build_boundary_fit(meshpinn::testing::unit_square(33));
  const auto bd = discretize_boundary(fit, 3, 5);
  ASSERT_EQ(bd.bottom.size(), 3u);
  EXPECT_EQ(bd.bottom[0], (Vec2{0, 0}));
  EXPECT_EQ(bd.bottom[1], (Vec2{0.5, 0}));
  EXPECT_EQ(bd.bottom[2], (Vec2{1, 0}));
  EXPECT_EQ(bd.left.size(), 5u);
  EXPECT_NO_THROW(bd.check());
  const auto two = discretize_boundary(fit, 2, 2);
  EXPECT_EQ(two.top[0], (Vec2{0, 1}));
  EXPECT_EQ(two.top[1], (Vec2{1, 1}));
}

TEST(Tfi, UnitSquareExact) {
  const auto bd = bilinear_boundary(33, 33, {0, 0}, {1, 0}, {0, 1}, {1, 1});
  const auto m = tfi(bd);
  for (int j = 0; j < 33; ++j)
    for (int i = 0; i < 33; ++i) {
      EXPECT_EQ(m(i, j).x, grid_coord(i, 33));
      EXPECT_EQ(m(i, j).y, grid_coord(j, 33));
    }
}

TEST(Tfi, SineBottomCentre) {
  const auto bd = sine_boundary(3, 3, 0.1);
  const auto m = tfi(bd);
  EXPECT_NEAR(m(1, 1).x, 0.5, 1e-12);
  EXPECT_NEAR(m(1, 1).y, 0.55, 1e-12);
}

TEST(Tfi, BoundaryReproduced) {
  const auto bd = sine_boundary(17, 9, 0.2);
  const auto m = tfi(bd);
  for (int i = 0; i < 17; ++i) {
    EXPECT_EQ(m(i, 0), bd.bottom[i]);
    EXPECT_EQ(m(i, 8), bd.top[i]);
  }
  for (int j = 0; j < 9; ++j) {
    EXPECT_EQ(m(0, j), bd.left[j]);
    EXPECT_EQ(m(16, j), bd.right[j]);
  }
}

TEST(Tfi, TranscribedFormBreaksBottomEdge) {
  const auto bd = sine_boundary(9, 9, 0.1);
  const auto m = tfi(bd, TfiForm::transcribed);
  double worst = 0.0;
  for (int i = 0; i < 9; ++i) worst = std::max(worst, distance(m(i, 8), bd.top[i]));
  EXPECT_EQ(worst, 0.0);  // eta = 1 on the top row, so the two forms agree there
  EXPECT_GT(distance(m(4, 0), bd.bottom[4]), 0.1);
}

TEST(Tfi, ConvexDomainsHaveNoInvertedCells) {
  for (double amp : {0.05, 0.1, 0.2}) {
    const auto m = tfi(sine_boundary(33, 33, amp));
    EXPECT_EQ(evaluate_mesh(m).inverted_cells, 0u);
  }
}

TEST(Tfi, CornerMismatchThrows) {
  auto bd = bilinear_boundary(5, 5, {0, 0}, {1, 0}, {0, 1}, {1, 1});
  bd.top[0] = {1e-3, 1.0};
  EXPECT_THROW(tfi(bd), InvalidGeometry);
}

TEST(Elliptic, SquareFromZeroInit) {
  const Vec2 p00{0, 0}, p10{1, 0}, p01{0, 1}, p11{1, 1};
  const auto bd = bilinear_boundary(33, 33, p00, p10, p01, p11);
  const auto r = elliptic_smooth(bd, 1000, EllipticInit::zero, 1.5);
  EXPECT_LE(max_deviation(r.mesh, p00, p10, p01, p11), 1e-8);
  ASSERT_EQ(r.residual_history.size(), 1000u);
  for (double v : r.residual_history) EXPECT_TRUE(std::isfinite(v));
  for (std::size_t k = 11; k < r.residual_history.size(); ++k)
    EXPECT_LE(r.residual_history[k], r.residual_history[k - 1] + 1e-12) << "sweep " << k;
}

TEST(Elliptic, Parallelogram) {
  const Vec2 p00{0, 0}, p10{1, 0}, p01{0.5, 1}, p11{1.5, 1};
  const auto bd = bilinear_boundary(21, 17, p00, p10, p01, p11);
  const auto r = elliptic_smooth(bd, 1000, EllipticInit::zero, 1.5);
  EXPECT_LE(max_deviation(r.mesh, p00, p10, p01, p11), 1e-8);
}

TEST(Elliptic, BoundaryUntouchedAndValidated) {
  const auto bd = sine_boundary(17, 17, 0.2);
  const auto r = elliptic_smooth(bd, 50);
  for (int i = 0; i < 17; ++i) EXPECT_EQ(r.mesh(i, 0), bd.bottom[i]);
  EXPECT_EQ(evaluate_mesh(r.mesh).inverted_cells, 0u);
  EXPECT_THROW(elliptic_smooth(bd, 0), InputError);
  EXPECT_THROW(elliptic_smooth(bd, 10, EllipticInit::tfi, 2.0), InputError);
}
