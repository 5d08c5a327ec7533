#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "gtex/geometry.hpp"

namespace gtex {
namespace {

// 3 x 2 atlas of square charts; each chart keeps a gutter to its cell border.
constexpr double kCellWidth = 1.0 / 3.0;
constexpr double kCellHeight = 0.5;
constexpr double kGutter = 1.0 / 64.0;

// Maps chart-local coordinates in [-1, 1]^2 into atlas cell `cell`.
Vec2 atlas_uv(int cell, double a, double b) {
  const double side = kCellWidth - 2.0 * kGutter;
  const double u0 = (cell % 3) * kCellWidth + kGutter;
  const double v0 = (cell / 3) * kCellHeight + (kCellHeight - side) * 0.5;
  return {u0 + (a + 1.0) * 0.5 * side, v0 + (b + 1.0) * 0.5 * side};
}

// Gnomonic cube-map projection seen from outside the face, so outward CCW winding stays CCW in UV.
// Cells: 0 +X, 1 -X, 2 +Y, 3 -Y, 4 +Z, 5 -Z.
Vec2 cube_chart(int cell, Vec3 p) {
  switch (cell) {
    case 0: return {-p.z / p.x, p.y / p.x};
    case 1: return {-p.z / p.x, -p.y / p.x};
    case 2: return {p.x / p.y, -p.z / p.y};
    case 3: return {-p.x / p.y, -p.z / p.y};
    case 4: return {p.x / p.z, p.y / p.z};
    default: return {p.x / p.z, -p.y / p.z};
  }
}

double axis_value(int cell, Vec3 p) {
  switch (cell / 2) {
    case 0: return cell % 2 == 0 ? p.x : -p.x;
    case 1: return cell % 2 == 0 ? p.y : -p.y;
    default: return cell % 2 == 0 ? p.z : -p.z;
  }
}

int dominant_cell(Vec3 n) {
  const double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
  if (ax >= ay && ax >= az) return n.x >= 0.0 ? 0 : 1;
  if (ay >= az) return n.y >= 0.0 ? 2 : 3;
  return n.z >= 0.0 ? 4 : 5;
}

}  // namespace

Mesh make_quad(double half_extent) {
  Mesh m;
  const double h = half_extent;
  m.positions = {{-h, -h, 0.0}, {h, -h, 0.0}, {h, h, 0.0}, {-h, h, 0.0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.uv_corners = {{Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}}, {Vec2{0, 0}, Vec2{1, 1}, Vec2{0, 1}}};
  compute_face_normals(m);
  return m;
}

Mesh make_cube(double half_extent) {
  Mesh m;
  const double h = half_extent;
  for (int i = 0; i < 8; ++i) m.positions.push_back({i & 1 ? h : -h, i & 2 ? h : -h, i & 4 ? h : -h});
  auto vertex = [](int sx, int sy, int sz) -> std::uint32_t {
    return static_cast<std::uint32_t>((sx > 0 ? 1 : 0) | (sy > 0 ? 2 : 0) | (sz > 0 ? 4 : 0));
  };
  for (int cell = 0; cell < 6; ++cell) {
    // Four face corners in chart order (-1,-1), (1,-1), (1,1), (-1,1).
    std::array<std::uint32_t, 4> q{};
    const std::array<std::pair<double, double>, 4> ab{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};
    for (int k = 0; k < 4; ++k) {
      const auto [a, b] = ab[k];
      // Invert cube_chart on the unit cube face.
      Vec3 p;
      switch (cell) {
        case 0: p = {1, b, -a}; break;
        case 1: p = {-1, b, a}; break;
        case 2: p = {a, 1, -b}; break;
        case 3: p = {a, -1, b}; break;
        case 4: p = {a, b, 1}; break;
        default: p = {-a, b, -1}; break;
      }
      q[k] = vertex(p.x > 0 ? 1 : -1, p.y > 0 ? 1 : -1, p.z > 0 ? 1 : -1);
    }
    const std::array<Vec2, 4> uv{atlas_uv(cell, -1, -1), atlas_uv(cell, 1, -1), atlas_uv(cell, 1, 1),
                                 atlas_uv(cell, -1, 1)};
    m.triangles.push_back({q[0], q[1], q[2]});
    m.uv_corners.push_back({uv[0], uv[1], uv[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
    m.uv_corners.push_back({uv[0], uv[2], uv[3]});
  }
  compute_face_normals(m);
  return m;
}

Mesh make_icosphere(int subdivisions, double radius) {
  if (subdivisions < 1) throw std::invalid_argument("icosphere needs at least one subdivision for cube-map UVs");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> pos = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : pos) p = normalize(p);
  std::vector<std::array<std::uint32_t, 3>> tris = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      pos.push_back(normalize((pos[a] + pos[b]) * 0.5));
      const auto idx = static_cast<std::uint32_t>(pos.size() - 1);
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    next.reserve(tris.size() * 4);
    for (const auto& tri : tris) {
      const auto ab = midpoint(tri[0], tri[1]);
      const auto bc = midpoint(tri[1], tri[2]);
      const auto ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }

  Mesh m;
  m.positions.reserve(pos.size());
  for (const Vec3& p : pos) m.positions.push_back(p * radius);
  m.triangles = tris;

  std::vector<int> cells(tris.size());
  double extent = 0.0;
  for (std::size_t f = 0; f < tris.size(); ++f) {
    const Vec3 centroid = pos[tris[f][0]] + pos[tris[f][1]] + pos[tris[f][2]];
    cells[f] = dominant_cell(centroid);
    for (std::uint32_t v : tris[f]) {
      if (axis_value(cells[f], pos[v]) <= 0.0) throw std::logic_error("icosphere chart projection failed");
      const Vec2 c = cube_chart(cells[f], pos[v]);
      extent = std::max({extent, std::abs(c.x), std::abs(c.y)});
    }
  }
  for (std::size_t f = 0; f < tris.size(); ++f) {
    std::array<Vec2, 3> uv;
    for (int k = 0; k < 3; ++k) {
      const Vec2 c = cube_chart(cells[f], pos[tris[f][k]]);
      uv[k] = atlas_uv(cells[f], c.x / extent, c.y / extent);
    }
    m.uv_corners.push_back(uv);
  }
  compute_face_normals(m);
  return m;
}

}  // namespace gtex
