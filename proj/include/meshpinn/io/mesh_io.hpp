#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "meshpinn/errors.hpp"
#include "meshpinn/mesh.hpp"

namespace meshpinn::io {

/// Round-trip text for a double: 17 significant digits.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// VTK legacy ASCII structured grid

inline std::string write_mesh_vtk(const StructuredMesh& mesh) {
  std::string out;
  out += "# vtk DataFile Version 3.0\n";
  out += "meshpinn structured mesh\n";
  out += "ASCII\n";
  out += "DATASET STRUCTURED_GRID\n";
  out += "DIMENSIONS " + std::to_string(mesh.ni()) + " " + std::to_string(mesh.nj()) + " 1\n";
  out += "POINTS " + std::to_string(mesh.size()) + " double\n";
  for (const auto& p : mesh.points()) {
    out += format_double(p.x);
    out += ' ';
    out += format_double(p.y);
    out += " 0\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plot3D, 2-D single block, ASCII: "ni nj", then every x, then every y,
// i fastest.

inline std::string write_mesh_p3d(const StructuredMesh& mesh) {
  std::string out = std::to_string(mesh.ni()) + " " + std::to_string(mesh.nj()) + "\n";
  for (const auto& p : mesh.points()) out += format_double(p.x) + "\n";
  for (const auto& p : mesh.points()) out += format_double(p.y) + "\n";
  return out;
}

namespace detail {

class Tokens {
 public:
  explicit Tokens(std::string_view text) : text_(text) {}

  std::string_view next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw InputError("mesh file: unexpected end of input");
    return text_.substr(start, pos_ - start);
  }

  double number() {
    const auto tok = next();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw InputError("mesh file: bad number \"" + std::string(tok) + "\"");
    return v;
  }

  int integer() {
    const auto tok = next();
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      throw InputError("mesh file: bad integer \"" + std::string(tok) + "\"");
    return v;
  }

  void expect(std::string_view word) {
    const auto tok = next();
    if (tok != word)
      throw InputError("mesh file: expected \"" + std::string(word) + "\", got \"" +
                       std::string(tok) + "\"");
  }

  void skip_line() {
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    if (pos_ < text_.size()) ++pos_;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Reads what write_mesh_vtk produces (2-D structured grid, z ignored).
inline StructuredMesh read_mesh_vtk(std::string_view text) {
  detail::Tokens tok(text);
  tok.skip_line();  // version line
  tok.skip_line();  // title
  tok.expect("ASCII");
  tok.expect("DATASET");
  tok.expect("STRUCTURED_GRID");
  tok.expect("DIMENSIONS");
  const int ni = tok.integer();
  const int nj = tok.integer();
  if (tok.integer() != 1) throw InputError("vtk: only 2-D grids (nk = 1) are supported");
  tok.expect("POINTS");
  const int n = tok.integer();
  tok.next();  // data type
  if (n != ni * nj) throw InputError("vtk: POINTS count does not match DIMENSIONS");
  StructuredMesh mesh(ni, nj);
  for (auto& p : mesh.points()) {
    p.x = tok.number();
    p.y = tok.number();
    tok.number();
  }
  return mesh;
}

inline StructuredMesh read_mesh_p3d(std::string_view text) {
  detail::Tokens tok(text);
  const int ni = tok.integer();
  const int nj = tok.integer();
  StructuredMesh mesh(ni, nj);
  for (auto& p : mesh.points()) p.x = tok.number();
  for (auto& p : mesh.points()) p.y = tok.number();
  return mesh;
}

// ---------------------------------------------------------------------------
// SVG: one polyline per grid line of each index family, physical y up.

inline std::string render_svg(const StructuredMesh& mesh, int width_px = 800,
                              double stroke = 1.0) {
  double minx = mesh.points().front().x, maxx = minx;
  double miny = mesh.points().front().y, maxy = miny;
  for (const auto& p : mesh.points()) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  double w = maxx - minx;
  double h = maxy - miny;
  const double span = std::max({w, h, 1e-12});
  if (w <= 0.0) w = span;
  if (h <= 0.0) h = span;
  const double mx = 0.02 * w;
  const double my = 0.02 * h;
  const double vb_w = w + 2 * mx;
  const double vb_h = h + 2 * my;
  const int height_px = std::max(1, static_cast<int>(width_px * vb_h / vb_w + 0.5));
  // Stroke is given in pixels; convert to user units.
  const double stroke_units = stroke * vb_w / width_px;

  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_px) +
         "\" height=\"" + std::to_string(height_px) + "\" viewBox=\"" + num(minx - mx) + " " +
         num(-(maxy + my)) + " " + num(vb_w) + " " + num(vb_h) + "\">\n";
  out += "<g fill=\"none\" stroke=\"black\" stroke-width=\"" + num(stroke_units) + "\">\n";
  auto line = [&](auto&& point_at, int count) {
    out += "<polyline points=\"";
    for (int k = 0; k < count; ++k) {
      const Vec2 p = point_at(k);
      if (k > 0) out += ' ';
      out += num(p.x) + "," + num(p.y == 0.0 ? 0.0 : -p.y);
    }
    out += "\"/>\n";
  };
  for (int j = 0; j < mesh.nj(); ++j) line([&](int i) { return mesh(i, j); }, mesh.ni());
  for (int i = 0; i < mesh.ni(); ++i) line([&](int j) { return mesh(i, j); }, mesh.nj());
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace meshpinn::io
