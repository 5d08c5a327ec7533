#include "gtex/uv_raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gtex {

std::size_t UvRaster::charted_count() const {
  return static_cast<std::size_t>(std::count_if(face.begin(), face.end(), [](std::int32_t f) { return f != kBackground; }));
}

namespace {

bool is_top_left(Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

}  // namespace

UvRaster rasterize_uv(const Mesh& mesh, int size) {
  if (size <= 0) throw std::invalid_argument("texture size must be positive");
  UvRaster out;
  out.size = size;
  const std::size_t n = static_cast<std::size_t>(size) * size;
  out.face.assign(n, kBackground);
  out.barycentric.assign(n, {0.0, 0.0, 0.0});

  for (std::size_t f = 0; f < mesh.uv_corners.size(); ++f) {
    std::array<Vec2, 3> p;
    std::array<int, 3> corner{0, 1, 2};
    for (int k = 0; k < 3; ++k) p[k] = {mesh.uv_corners[f][k].x * size, (1.0 - mesh.uv_corners[f][k].y) * size};
    double area = cross2(p[0], p[1], p[2]);
    if (area == 0.0) continue;
    if (area < 0.0) {
      std::swap(p[1], p[2]);
      std::swap(corner[1], corner[2]);
      area = -area;
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].x, p[1].x, p[2].x}) - 0.5)));
    const int x1 = std::min(size - 1, static_cast<int>(std::floor(std::max({p[0].x, p[1].x, p[2].x}) - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].y, p[1].y, p[2].y}) - 0.5)));
    const int y1 = std::min(size - 1, static_cast<int>(std::floor(std::max({p[0].y, p[1].y, p[2].y}) - 0.5)));
    const bool tl0 = is_top_left(p[1], p[2]);
    const bool tl1 = is_top_left(p[2], p[0]);
    const bool tl2 = is_top_left(p[0], p[1]);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 c{x + 0.5, y + 0.5};
        const double e0 = edge_function(p[1], p[2], c);
        const double e1 = edge_function(p[2], p[0], c);
        const double e2 = edge_function(p[0], p[1], c);
        if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
        if ((e0 == 0.0 && !tl0) || (e1 == 0.0 && !tl1) || (e2 == 0.0 && !tl2)) continue;
        const std::size_t idx = static_cast<std::size_t>(y) * size + x;
        if (out.face[idx] != kBackground) {
          ++out.overlapping;
          continue;
        }
        out.face[idx] = static_cast<std::int32_t>(f);
        std::array<double, 3> bary{};
        bary[corner[0]] = e0 / area;
        bary[corner[1]] = e1 / area;
        bary[corner[2]] = e2 / area;
        out.barycentric[idx] = bary;
      }
    }
  }
  return out;
}

}  // namespace gtex
