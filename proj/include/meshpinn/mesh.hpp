#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/geometry.hpp"

namespace meshpinn {

/// ni x nj grid of physical points; node (i, j) sits at xi = i/(ni-1),
/// eta = j/(nj-1). Storage is j-major: index = j*ni + i.
class StructuredMesh {
 public:
  StructuredMesh() = default;
  StructuredMesh(int ni, int nj) : ni_(ni), nj_(nj) {
    if (ni < 2 || nj < 2) throw InputError("structured mesh needs ni, nj >= 2");
    points_.resize(static_cast<std::size_t>(ni) * static_cast<std::size_t>(nj));
  }

  int ni() const { return ni_; }
  int nj() const { return nj_; }
  std::size_t size() const { return points_.size(); }

  Vec2& operator()(int i, int j) { return points_[index(i, j)]; }
  const Vec2& operator()(int i, int j) const { return points_[index(i, j)]; }

  const std::vector<Vec2>& points() const { return points_; }
  std::vector<Vec2>& points() { return points_; }

  bool all_finite() const {
    for (const auto& p : points_)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    return true;
  }

  friend bool operator==(const StructuredMesh&, const StructuredMesh&) = default;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(ni_) + static_cast<std::size_t>(i);
  }

  int ni_ = 0;
  int nj_ = 0;
  std::vector<Vec2> points_;
};

inline double grid_coord(int k, int n) {
  return k == n - 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(n - 1);
}

}  // namespace meshpinn
