#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/jet.hpp"
#include "meshpinn/rng.hpp"

namespace meshpinn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
constexpr Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class Side { bottom = 0, top = 1, left = 2, right = 3, auxiliary = 4 };

inline constexpr std::array<Side, 4> kBoundarySides{Side::bottom, Side::top, Side::left,
                                                    Side::right};

constexpr std::string_view to_string(Side s) {
  switch (s) {
    case Side::bottom: return "bottom";
    case Side::top: return "top";
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::auxiliary: return "auxiliary";
  }
  return "?";
}

inline constexpr double kCornerTolerance = 1e-9;

struct ControlPolyline {
  Side side = Side::bottom;
  std::vector<Vec2> points;
};

struct AuxiliaryLine {
  std::vector<Vec2> points;
  Axis fixed_axis = Axis::xi;
  double fixed_value = 0.5;
};

struct GeometrySpec {
  ControlPolyline bottom{Side::bottom, {}};
  ControlPolyline top{Side::top, {}};
  ControlPolyline left{Side::left, {}};
  ControlPolyline right{Side::right, {}};
  std::vector<AuxiliaryLine> aux_lines;

  const ControlPolyline& boundary(Side s) const {
    switch (s) {
      case Side::bottom: return bottom;
      case Side::top: return top;
      case Side::left: return left;
      case Side::right: return right;
      default: throw InvalidGeometry("auxiliary is not a boundary side");
    }
  }
};

/// A computational point with its known physical image.
struct TrainingPoint {
  double xi = 0.0;
  double eta = 0.0;
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const TrainingPoint&, const TrainingPoint&) = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string code;  // corner_mismatch, orientation, too_few_points, repeated_point, aux_range
  std::string message;
};

namespace detail {

inline void check_points(std::string_view name, std::span<const Vec2> pts,
                         std::vector<Violation>& out) {
  if (pts.size() < 2) {
    out.push_back({"too_few_points", std::string(name) + ": needs at least 2 points, got " +
                                         std::to_string(pts.size())});
    return;
  }
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (!(distance(pts[k - 1], pts[k]) > 0.0)) {
      out.push_back({"repeated_point", std::string(name) + ": points " + std::to_string(k - 1) +
                                           " and " + std::to_string(k) + " coincide"});
    }
  }
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (!std::isfinite(pts[k].x) || !std::isfinite(pts[k].y)) {
      out.push_back({"non_finite", std::string(name) + ": point " + std::to_string(k) +
                                       " is not finite"});
    }
  }
}

inline bool near(Vec2 a, Vec2 b) { return distance(a, b) <= kCornerTolerance; }

}  // namespace detail

/// Returns every violation found; an empty list means the geometry is valid.
inline std::vector<Violation> validate_geometry(const GeometrySpec& spec) {
  std::vector<Violation> out;
  for (Side s : kBoundarySides) {
    detail::check_points(to_string(s), spec.boundary(s).points, out);
  }
  for (std::size_t a = 0; a < spec.aux_lines.size(); ++a) {
    const auto& line = spec.aux_lines[a];
    const std::string name = "aux_lines[" + std::to_string(a) + "]";
    detail::check_points(name, line.points, out);
    if (!(line.fixed_value > 0.0 && line.fixed_value < 1.0)) {
      std::ostringstream msg;
      msg << name << ": fixed_value " << line.fixed_value << " must lie strictly inside (0,1)";
      out.push_back({"aux_range", msg.str()});
    }
  }

  const auto& b = spec.bottom.points;
  const auto& t = spec.top.points;
  const auto& l = spec.left.points;
  const auto& r = spec.right.points;
  if (b.size() < 2 || t.size() < 2 || l.size() < 2 || r.size() < 2) return out;

  // Orientation: a side is reversed when flipping it alone closes both of its corners.
  auto reversed = [](Vec2 front, Vec2 back, Vec2 want_front, Vec2 want_back) {
    return !(detail::near(front, want_front) && detail::near(back, want_back)) &&
           detail::near(front, want_back) && detail::near(back, want_front);
  };
  if (reversed(l.front(), l.back(), b.front(), t.front())) {
    out.push_back({"orientation", "left: must run bottom to top"});
    return out;
  }
  if (reversed(r.front(), r.back(), b.back(), t.back())) {
    out.push_back({"orientation", "right: must run bottom to top"});
    return out;
  }
  if (reversed(b.front(), b.back(), l.front(), r.front())) {
    out.push_back({"orientation", "bottom: must run left to right"});
    return out;
  }
  if (reversed(t.front(), t.back(), l.back(), r.back())) {
    out.push_back({"orientation", "top: must run left to right"});
    return out;
  }

  auto corner = [&](std::string_view name, Vec2 p, Vec2 q) {
    if (!detail::near(p, q)) {
      std::ostringstream msg;
      msg << "corner " << name << ": endpoints differ by " << distance(p, q);
      out.push_back({"corner_mismatch", msg.str()});
    }
  };
  corner("bottom-left", b.front(), l.front());
  corner("bottom-right", b.back(), r.front());
  corner("top-left", t.front(), l.back());
  corner("top-right", t.back(), r.back());
  return out;
}

inline void require_valid(const GeometrySpec& spec) {
  const auto violations = validate_geometry(spec);
  if (violations.empty()) return;
  std::string msg = "invalid geometry:";
  for (const auto& v : violations) msg += "\n  [" + v.code + "] " + v.message;
  throw InvalidGeometry(msg);
}

// ---------------------------------------------------------------------------
// Boundary parameterization

struct ParamPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Uniform-by-index computational parameter: point k of n gets t = k/(n-1).
inline std::vector<ParamPoint> parameterize_boundary(const ControlPolyline& line) {
  const std::size_t n = line.points.size();
  if (n < 2) throw InvalidGeometry(std::string(to_string(line.side)) + ": fewer than 2 points");
  std::vector<ParamPoint> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = {k == n - 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(n - 1),
              line.points[k].x, line.points[k].y};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regression tree (CART, squared error, one scalar feature)

struct TreeSample {
  double t = 0.0;
  double target = 0.0;
};

class RegressionTree {
 public:
  struct Node {
    double threshold = 0.0;  // split nodes only
    double value = 0.0;      // leaf mean
    std::int32_t left = -1;  // -1 marks a leaf
    std::int32_t right = -1;
    std::int32_t count = 0;
    std::int32_t depth = 0;

    bool is_leaf() const { return left < 0; }
  };

  RegressionTree() = default;

  double predict(double t) const {
    std::int32_t i = 0;
    while (!nodes_[i].is_leaf()) i = t < nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].value;
  }

  std::span<const Node> nodes() const { return nodes_; }
  int max_depth() const { return max_depth_; }
  int min_leaf() const { return min_leaf_; }

  int depth() const {
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, static_cast<int>(n.depth));
    return d;
  }

  std::vector<double> leaf_values() const {
    std::vector<double> out;
    for (const auto& n : nodes_)
      if (n.is_leaf()) out.push_back(n.value);
    return out;
  }

  friend RegressionTree fit_regression_tree(std::span<const TreeSample>, int, int);

 private:
  std::vector<Node> nodes_;
  int max_depth_ = 0;
  int min_leaf_ = 1;

  std::int32_t grow(std::vector<TreeSample>& s, std::size_t lo, std::size_t hi, int depth);
};

inline std::int32_t RegressionTree::grow(std::vector<TreeSample>& s, std::size_t lo,
                                         std::size_t hi, int depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  const std::size_t n = hi - lo;

  double sum = 0.0;
  double lo_target = s[lo].target;
  double hi_target = s[lo].target;
  for (std::size_t k = lo; k < hi; ++k) {
    sum += s[k].target;
    lo_target = std::min(lo_target, s[k].target);
    hi_target = std::max(hi_target, s[k].target);
  }
  const bool constant = lo_target == hi_target;
  nodes_[id].value = constant ? lo_target : sum / static_cast<double>(n);
  nodes_[id].count = static_cast<std::int32_t>(n);
  nodes_[id].depth = depth;

  const auto min_leaf = static_cast<std::size_t>(min_leaf_);
  if (constant || depth >= max_depth_ || n < 2 * min_leaf) return id;

  // SSE(left) + SSE(right) = sumsq - sl^2/nl - sr^2/nr; the gain is
  // sl^2/nl + sr^2/nr - sum^2/n. Ties keep the smaller threshold.
  double best_gain = 0.0;
  std::size_t best_split = 0;
  double left_sum = 0.0;
  for (std::size_t k = lo; k + 1 < hi; ++k) {
    left_sum += s[k].target;
    const std::size_t nl = k + 1 - lo;
    const std::size_t nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    if (!(s[k].t < s[k + 1].t)) continue;
    const double right_sum = sum - left_sum;
    const double gain = left_sum * left_sum / static_cast<double>(nl) +
                        right_sum * right_sum / static_cast<double>(nr) -
                        sum * sum / static_cast<double>(n);
    if (gain > best_gain) {
      best_gain = gain;
      best_split = k + 1;
    }
  }
  if (best_split == 0) return id;

  const double threshold = 0.5 * (s[best_split - 1].t + s[best_split].t);
  const auto left = grow(s, lo, best_split, depth + 1);
  const auto right = grow(s, best_split, hi, depth + 1);
  nodes_[id].threshold = threshold;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

/// Greedy squared-error regression tree. Splits are midpoints between
/// consecutive distinct sorted t values.
inline RegressionTree fit_regression_tree(std::span<const TreeSample> samples, int max_depth,
                                          int min_leaf) {
  if (samples.empty()) throw EmptyTrainingSet("regression tree needs at least one sample");
  if (max_depth < 0) throw InputError("max_depth must be >= 0");
  if (min_leaf < 1) throw InputError("min_leaf must be >= 1");
  std::vector<TreeSample> sorted(samples.begin(), samples.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TreeSample& a, const TreeSample& b) { return a.t < b.t; });
  RegressionTree tree;
  tree.max_depth_ = max_depth;
  tree.min_leaf_ = min_leaf;
  tree.grow(sorted, 0, sorted.size(), 0);
  return tree;
}

inline double predict_tree(const RegressionTree& tree, double t) { return tree.predict(t); }

// ---------------------------------------------------------------------------
// Boundary fit

inline constexpr int kDefaultTreeDepth = 12;
inline constexpr int kDefaultMinLeaf = 1;

struct SideFit {
  RegressionTree fit_x;
  RegressionTree fit_y;

  Vec2 operator()(double t) const { return {fit_x.predict(t), fit_y.predict(t)}; }
};

struct BoundaryFit {
  std::array<SideFit, 4> sides;  // indexed by Side::bottom..Side::right

  const SideFit& side(Side s) const { return sides.at(static_cast<std::size_t>(s)); }
};

inline BoundaryFit build_boundary_fit(const GeometrySpec& spec, int max_depth = kDefaultTreeDepth,
                                      int min_leaf = kDefaultMinLeaf) {
  BoundaryFit fit;
  for (Side s : kBoundarySides) {
    const auto params = parameterize_boundary(spec.boundary(s));
    std::vector<TreeSample> xs;
    std::vector<TreeSample> ys;
    xs.reserve(params.size());
    ys.reserve(params.size());
    for (const auto& p : params) {
      xs.push_back({p.t, p.x});
      ys.push_back({p.t, p.y});
    }
    auto& side = fit.sides[static_cast<std::size_t>(s)];
    side.fit_x = fit_regression_tree(xs, max_depth, min_leaf);
    side.fit_y = fit_regression_tree(ys, max_depth, min_leaf);
  }
  return fit;
}

/// Computational coordinates of a boundary point with running parameter t.
constexpr std::pair<double, double> boundary_coords(Side side, double t) {
  switch (side) {
    case Side::bottom: return {t, 0.0};
    case Side::top: return {t, 1.0};
    case Side::left: return {0.0, t};
    case Side::right: return {1.0, t};
    default: return {t, t};
  }
}

inline std::vector<TrainingPoint> sample_boundary(const BoundaryFit& fit, Side side, int n,
                                                  std::uint64_t seed) {
  if (n < 1) throw InputError("sample_boundary: n must be >= 1");
  Rng rng(seed);
  const auto& sf = fit.side(side);
  std::vector<TrainingPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = rng.uniform();
    const auto [xi, eta] = boundary_coords(side, t);
    out.push_back({xi, eta, sf.fit_x.predict(t), sf.fit_y.predict(t)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Auxiliary lines

inline double polyline_length(std::span<const Vec2> pts) {
  double len = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) len += distance(pts[k - 1], pts[k]);
  return len;
}

/// Point at normalized arc length s in [0,1] along a piecewise-linear polyline.
inline Vec2 point_at_arclength(std::span<const Vec2> pts, double s) {
  if (pts.size() < 2) throw InvalidGeometry("auxiliary line needs at least 2 points");
  const double total = polyline_length(pts);
  if (!(total > 0.0)) throw InvalidGeometry("auxiliary line has zero length");
  if (s <= 0.0) return pts.front();
  if (s >= 1.0) return pts.back();
  const double target = s * total;
  double run = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double seg = distance(pts[k - 1], pts[k]);
    if (run + seg >= target && seg > 0.0) {
      const double u = std::clamp((target - run) / seg, 0.0, 1.0);
      return pts[k - 1] + u * (pts[k] - pts[k - 1]);
    }
    run += seg;
  }
  return pts.back();
}

inline TrainingPoint auxiliary_point(const AuxiliaryLine& line, double s) {
  const Vec2 p = point_at_arclength(line.points, s);
  if (line.fixed_axis == Axis::xi) return {line.fixed_value, s, p.x, p.y};
  return {s, line.fixed_value, p.x, p.y};
}

inline std::vector<TrainingPoint> sample_auxiliary(const AuxiliaryLine& line, int n,
                                                   std::uint64_t seed) {
  if (n < 1) throw InputError("sample_auxiliary: n must be >= 1");
  if (line.points.size() < 2 || !(polyline_length(line.points) > 0.0))
    throw InvalidGeometry("auxiliary line is degenerate");
  Rng rng(seed);
  std::vector<TrainingPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.push_back(auxiliary_point(line, rng.uniform()));
  return out;
}

}  // namespace meshpinn
