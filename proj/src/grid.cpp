#include "gtex/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include "gtex/bytes.hpp"

namespace gtex {

std::string_view to_string(GridRole role) {
  switch (role) {
    case GridRole::latent_texture: return "latent_texture";
    case GridRole::latent_image: return "latent_image";
    case GridRole::rgb_texture: return "rgb_texture";
    case GridRole::rgb_image: return "rgb_image";
    case GridRole::mask: return "mask";
  }
  return "unknown";
}

bool is_texture_role(GridRole role) {
  return role == GridRole::latent_texture || role == GridRole::rgb_texture || role == GridRole::mask;
}

bool is_image_role(GridRole role) {
  return role == GridRole::latent_image || role == GridRole::rgb_image || role == GridRole::mask;
}

GridRole texture_role_for(GridRole image_role) {
  switch (image_role) {
    case GridRole::latent_image: return GridRole::latent_texture;
    case GridRole::rgb_image: return GridRole::rgb_texture;
    case GridRole::mask: return GridRole::mask;
    default: throw std::invalid_argument("grid role is not an image role: " + std::string(to_string(image_role)));
  }
}

GridRole image_role_for(GridRole texture_role) {
  switch (texture_role) {
    case GridRole::latent_texture: return GridRole::latent_image;
    case GridRole::rgb_texture: return GridRole::rgb_image;
    case GridRole::mask: return GridRole::mask;
    default:
      throw std::invalid_argument("grid role is not a texture role: " + std::string(to_string(texture_role)));
  }
}

Grid::Grid(int channels, int height, int width, GridRole role, float fill)
    : channels_(channels), height_(height), width_(width), role_(role) {
  if (channels <= 0 || height <= 0 || width <= 0) throw std::invalid_argument("grid dimensions must be positive");
  values_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

float Grid::sample_bilinear(int c, double px, double py) const {
  const double fx = px - 0.5;
  const double fy = py - 0.5;
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double tx = fx - x0f;
  const double ty = fy - y0f;
  const int x0 = std::clamp(static_cast<int>(x0f), 0, width_ - 1);
  const int y0 = std::clamp(static_cast<int>(y0f), 0, height_ - 1);
  const int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, width_ - 1);
  const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, height_ - 1);
  const double v00 = at(c, y0, x0);
  const double v01 = at(c, y0, x1);
  const double v10 = at(c, y1, x0);
  const double v11 = at(c, y1, x1);
  const double top = v00 + (v01 - v00) * tx;
  const double bottom = v10 + (v11 - v10) * tx;
  return static_cast<float>(top + (bottom - top) * ty);
}

bool all_finite(const Grid& grid) {
  return std::all_of(grid.values().begin(), grid.values().end(), [](float v) { return std::isfinite(v); });
}

float max_abs_diff(const Grid& a, const Grid& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

void write_gtex(const std::filesystem::path& path, const Grid& grid) {
  ByteWriter w;
  w.put_string("GTEX");
  w.put(static_cast<std::uint32_t>(grid.channels()));
  w.put(static_cast<std::uint32_t>(grid.height()));
  w.put(static_cast<std::uint32_t>(grid.width()));
  w.put_floats(grid.values());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
}

Grid read_gtex(const std::filesystem::path& path, GridRole role) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  if (r.get_string(4) != "GTEX") throw std::runtime_error("not a GTEX file: " + path.string());
  const auto c = r.get<std::uint32_t>();
  const auto h = r.get<std::uint32_t>();
  const auto wd = r.get<std::uint32_t>();
  Grid grid(static_cast<int>(c), static_cast<int>(h), static_cast<int>(wd), role);
  r.get_floats(grid.values());
  return grid;
}

}  // namespace gtex
