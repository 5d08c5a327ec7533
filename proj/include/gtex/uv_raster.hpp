#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gtex/geometry.hpp"

namespace gtex {

// Texel ownership from rasterizing every triangle in UV space at texel centers.
struct UvRaster {
  int size = 0;
  std::vector<std::int32_t> face;               // kBackground when uncharted
  std::vector<std::array<double, 3>> barycentric;
  std::size_t overlapping = 0;                  // texels claimed by more than one face

  std::size_t charted_count() const;
};

// Texel (x, y) has its center at u = (x + 0.5) / size, v = 1 - (y + 0.5) / size. Overlaps keep
// the lowest face index; shared edges follow the top-left rule so no texel is counted twice.
UvRaster rasterize_uv(const Mesh& mesh, int size);

}  // namespace gtex
