#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"
#include "meshpinn/mesh.hpp"

namespace meshpinn {

inline constexpr double kDegenerateEdge = 1e-14;
inline constexpr double kHistogramBinWidth = 5.0;
/// 36 bins of 5 degrees cover [0, 180]; one extra bin collects reflex maxima.
inline constexpr std::size_t kHistogramBins = 37;

namespace detail {
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
}  // namespace detail

/// Interior angles (degrees) of a quad given counter-clockwise. The angle at
/// a vertex is measured from the edge to the next vertex round to the edge
/// to the previous one, so reflex corners come out above 180.
inline std::array<double, 4> cell_angles(const std::array<Vec2, 4>& q) {
  std::array<double, 4> out{};
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec2 v = q[k];
    const Vec2 next = q[(k + 1) % 4] - v;
    const Vec2 prev = q[(k + 3) % 4] - v;
    if (std::hypot(next.x, next.y) < kDegenerateEdge || std::hypot(prev.x, prev.y) < kDegenerateEdge)
      throw DegenerateCell("cell has a repeated vertex");
    double deg = std::atan2(detail::cross(next, prev), detail::dot(next, prev)) * 180.0 /
                 std::numbers::pi;
    if (deg <= 0.0) deg += 360.0;
    out[k] = deg;
  }
  return out;
}

/// Shoelace area, positive for counter-clockwise vertex order.
inline double signed_area(const std::array<Vec2, 4>& q) {
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += detail::cross(q[k], q[(k + 1) % 4]);
  return 0.5 * s;
}

inline std::array<Vec2, 4> mesh_cell(const StructuredMesh& m, int i, int j) {
  return {m(i, j), m(i + 1, j), m(i + 1, j + 1), m(i, j + 1)};
}

struct QualityReport {
  int ni = 0;
  int nj = 0;
  std::size_t cells = 0;
  std::vector<double> cell_max_angle;  // per non-degenerate cell, row-major over (i, j)
  double global_max = 0.0;
  double mean_max = 0.0;
  std::vector<std::size_t> histogram = std::vector<std::size_t>(kHistogramBins, 0);
  std::size_t nonconvex_cells = 0;  // some interior angle above 180
  std::size_t inverted_cells = 0;   // signed area <= 0
  std::size_t degenerate_cells = 0; // edge shorter than kDegenerateEdge; excluded from angles
};

inline std::size_t histogram_bin(double angle) {
  if (angle > 180.0) return kHistogramBins - 1;
  const auto b = static_cast<std::size_t>(angle / kHistogramBinWidth);
  return std::min(b, kHistogramBins - 2);
}

inline QualityReport evaluate_mesh(const StructuredMesh& mesh) {
  if (mesh.ni() < 2 || mesh.nj() < 2) throw InputError("evaluate_mesh: ni, nj must be >= 2");
  QualityReport r;
  r.ni = mesh.ni();
  r.nj = mesh.nj();
  r.cells = static_cast<std::size_t>(mesh.ni() - 1) * static_cast<std::size_t>(mesh.nj() - 1);
  r.cell_max_angle.reserve(r.cells);
  // Angles are measured against the mesh's overall orientation, so a
  // mirrored mesh keeps its angles while every cell reports as inverted.
  double total_area = 0.0;
  for (int j = 0; j + 1 < mesh.nj(); ++j)
    for (int i = 0; i + 1 < mesh.ni(); ++i) total_area += signed_area(mesh_cell(mesh, i, j));
  const bool mirrored = total_area < 0.0;
  double sum = 0.0;
  for (int j = 0; j + 1 < mesh.nj(); ++j) {
    for (int i = 0; i + 1 < mesh.ni(); ++i) {
      auto q = mesh_cell(mesh, i, j);
      if (signed_area(q) <= 0.0) ++r.inverted_cells;
      if (mirrored) std::swap(q[1], q[3]);
      std::array<double, 4> angles;
      try {
        angles = cell_angles(q);
      } catch (const DegenerateCell&) {
        ++r.degenerate_cells;
        continue;
      }
      const double mx = *std::max_element(angles.begin(), angles.end());
      if (mx > 180.0) ++r.nonconvex_cells;
      r.cell_max_angle.push_back(mx);
      r.global_max = std::max(r.global_max, mx);
      sum += mx;
      ++r.histogram[histogram_bin(mx)];
    }
  }
  if (!r.cell_max_angle.empty()) r.mean_max = sum / static_cast<double>(r.cell_max_angle.size());
  return r;
}

struct ComparisonSummary {
  double max_a = 0.0, max_b = 0.0, delta_max = 0.0;
  double mean_a = 0.0, mean_b = 0.0, delta_mean = 0.0;
  long long inverted_a = 0, inverted_b = 0, delta_inverted = 0;
  long long nonconvex_a = 0, nonconvex_b = 0, delta_nonconvex = 0;

  std::string table(const std::string& name_a = "a", const std::string& name_b = "b") const {
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-22s %12s %12s %12s\n", "metric", name_a.c_str(),
                  name_b.c_str(), "delta");
    out += buf;
    std::snprintf(buf, sizeof buf, "%-22s %12.3f %12.3f %12.3f\n", "max included angle", max_a,
                  max_b, delta_max);
    out += buf;
    std::snprintf(buf, sizeof buf, "%-22s %12.3f %12.3f %12.3f\n", "mean max angle", mean_a,
                  mean_b, delta_mean);
    out += buf;
    std::snprintf(buf, sizeof buf, "%-22s %12lld %12lld %12lld\n", "inverted cells", inverted_a,
                  inverted_b, delta_inverted);
    out += buf;
    std::snprintf(buf, sizeof buf, "%-22s %12lld %12lld %12lld\n", "non-convex cells",
                  nonconvex_a, nonconvex_b, delta_nonconvex);
    out += buf;
    return out;
  }
};

/// Deltas are a - b.
inline ComparisonSummary compare_reports(const QualityReport& a, const QualityReport& b) {
  ComparisonSummary s;
  s.max_a = a.global_max;
  s.max_b = b.global_max;
  s.delta_max = a.global_max - b.global_max;
  s.mean_a = a.mean_max;
  s.mean_b = b.mean_max;
  s.delta_mean = a.mean_max - b.mean_max;
  s.inverted_a = static_cast<long long>(a.inverted_cells);
  s.inverted_b = static_cast<long long>(b.inverted_cells);
  s.delta_inverted = s.inverted_a - s.inverted_b;
  s.nonconvex_a = static_cast<long long>(a.nonconvex_cells);
  s.nonconvex_b = static_cast<long long>(b.nonconvex_cells);
  s.delta_nonconvex = s.nonconvex_a - s.nonconvex_b;
  return s;
}

}  // namespace meshpinn
