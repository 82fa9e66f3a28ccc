#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "meshpinn/quality.hpp"

using namespace meshpinn;

namespace {

StructuredMesh uniform_square(int n) {
  StructuredMesh m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = {grid_coord(i, n), grid_coord(j, n)};
  return m;
}

StructuredMesh wavy(int n, std::uint64_t seed) {
  auto m = uniform_square(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  const double h = 1.0 / (n - 1);
  for (int j = 1; j + 1 < n; ++j)
    for (int i = 1; i + 1 < n; ++i) m(i, j) = m(i, j) + h * Vec2{u(rng), u(rng)};
  return m;
}

}  // namespace

TEST(CellAngles, Square) {
  const auto a = cell_angles({Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}});
  for (double v : a) EXPECT_NEAR(v, 90.0, 1e-12);
}

TEST(CellAngles, Parallelogram) {
  const auto a = cell_angles({Vec2{0, 0}, Vec2{1, 0}, Vec2{1.5, 1}, Vec2{0.5, 1}});
  const double acute = std::acos(0.5 / std::sqrt(1.25)) * 180.0 / std::numbers::pi;
  EXPECT_NEAR(acute, 63.435, 1e-3);
  EXPECT_NEAR(a[0], acute, 1e-9);
  EXPECT_NEAR(a[1], 180.0 - acute, 1e-9);
  EXPECT_NEAR(a[2], acute, 1e-9);
  EXPECT_NEAR(a[3], 180.0 - acute, 1e-9);
}

TEST(CellAngles, SimpleQuadsSumTo360) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 200; ++k) {
    const std::array<Vec2, 4> q{Vec2{u(rng), u(rng)}, Vec2{1 + u(rng), u(rng)},
                                Vec2{1 + u(rng), 1 + u(rng)}, Vec2{u(rng), 1 + u(rng)}};
    const auto a = cell_angles(q);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 360.0, 1e-9);
    for (double v : a) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 360.0);
    }
  }
}

TEST(CellAngles, ReflexCornerAbove180) {
  // Dart: vertex 2 pushed inside.
  const auto a = cell_angles({Vec2{0, 0}, Vec2{1, 0}, Vec2{0.3, 0.3}, Vec2{0, 1}});
  EXPECT_GT(a[2], 180.0);
  EXPECT_NEAR(a[0] + a[1] + a[2] + a[3], 360.0, 1e-9);
}

TEST(CellAngles, DegenerateThrows) {
  EXPECT_THROW(cell_angles({Vec2{0, 0}, Vec2{0, 0}, Vec2{1, 1}, Vec2{0, 1}}), DegenerateCell);
}

TEST(Evaluate, UniformSquare) {
  const auto r = evaluate_mesh(uniform_square(33));
  EXPECT_EQ(r.cells, 32u * 32u);
  EXPECT_NEAR(r.global_max, 90.0, 1e-9);
  EXPECT_NEAR(r.mean_max, 90.0, 1e-9);
  EXPECT_EQ(r.inverted_cells, 0u);
  EXPECT_EQ(r.histogram[histogram_bin(90.0)], r.cells);
}

TEST(Evaluate, BowtieCounted) {
  auto m = uniform_square(3);
  std::swap(m(1, 1), m(2, 1));  // crossing in the bottom-right and top-right cells
  const auto r = evaluate_mesh(m);
  EXPECT_GE(r.inverted_cells, 1u);
}

TEST(Evaluate, DegenerateCellExcluded) {
  auto m = uniform_square(3);
  m(1, 1) = m(0, 1);
  const auto r = evaluate_mesh(m);
  EXPECT_EQ(r.degenerate_cells, 2u);
  std::size_t total = 0;
  for (auto c : r.histogram) total += c;
  EXPECT_EQ(total + r.degenerate_cells, r.cells);
}

TEST(Evaluate, HistogramSumsToCells) {
  const auto r = evaluate_mesh(wavy(20, 3));
  std::size_t total = 0;
  for (auto c : r.histogram) total += c;
  EXPECT_EQ(total, r.cells);
  EXPECT_GE(r.global_max, r.mean_max);
}

TEST(Evaluate, RigidMotionInvariance) {
  const auto m = wavy(15, 8);
  const auto base = evaluate_mesh(m);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 10; ++k) {
    const double th = u(rng), tx = u(rng), ty = u(rng);
    auto moved = m;
    for (auto& p : moved.points())
      p = {std::cos(th) * p.x - std::sin(th) * p.y + tx, std::sin(th) * p.x + std::cos(th) * p.y + ty};
    const auto r = evaluate_mesh(moved);
    EXPECT_NEAR(r.global_max, base.global_max, 1e-9);
    EXPECT_NEAR(r.mean_max, base.mean_max, 1e-9);
    EXPECT_EQ(r.inverted_cells, base.inverted_cells);
  }
}

TEST(Evaluate, ReflectionFlipsOrientation) {
  const auto m = wavy(10, 2);
  auto mirrored = m;
  for (auto& p : mirrored.points()) p.x = -p.x;
  const auto a = evaluate_mesh(m);
  const auto b = evaluate_mesh(mirrored);
  EXPECT_EQ(a.inverted_cells, 0u);
  EXPECT_EQ(b.inverted_cells, b.cells);
  EXPECT_NEAR(a.global_max, b.global_max, 1e-9);
  EXPECT_NEAR(a.mean_max, b.mean_max, 1e-9);
  EXPECT_EQ(a.histogram, b.histogram);
}

TEST(Compare, Deltas) {
  QualityReport a, b;
  EXPECT_EQ(compare_reports(a, a).delta_max, 0.0);
  EXPECT_EQ(compare_reports(a, a).delta_mean, 0.0);
  EXPECT_EQ(compare_reports(a, a).delta_inverted, 0);
  a.global_max = 161.4;
  b.global_max = 174.0;
  a.mean_max = 101.7;
  b.mean_max = 103.1;
  const auto s = compare_reports(a, b);
  EXPECT_NEAR(s.delta_max, -12.6, 1e-12);
  EXPECT_NEAR(s.delta_mean, -1.4, 1e-12);
  EXPECT_NE(s.table("full", "ablation").find("-12.600"), std::string::npos);
}
