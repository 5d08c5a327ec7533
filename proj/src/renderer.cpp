#include "gtex/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gtex/parallel.hpp"
#include "gtex/uv_raster.hpp"

namespace gtex {

float sample_texture(const Grid& texture, int channel, Vec2 uv) {
  return texture.sample_bilinear(channel, uv.x * texture.width(), (1.0 - uv.y) * texture.height());
}

Grid render(const Grid& texture, const Mesh& mesh, const ViewBuffers& buffers) {
  if (!is_texture_role(texture.role())) {
    throw std::invalid_argument("render expects a texture grid, got " + std::string(to_string(texture.role())));
  }
  const int size = buffers.size;
  Grid image(texture.channels(), size, size, image_role_for(texture.role()));
  parallel_for(0, size, [&](int y) {
    for (int x = 0; x < size; ++x) {
      const std::size_t idx = buffers.index(x, y);
      const std::int32_t f = buffers.face_id[idx];
      if (f == kBackground) continue;
      const auto& b = buffers.barycentric[idx];
      const auto& uvs = mesh.uv_corners[static_cast<std::size_t>(f)];
      const Vec2 uv = uvs[0] * static_cast<double>(b[0]) + uvs[1] * static_cast<double>(b[1]) +
                      uvs[2] * static_cast<double>(b[2]);
      for (int c = 0; c < texture.channels(); ++c) image.at(c, y, x) = sample_texture(texture, c, uv);
    }
  });
  return image;
}

std::size_t TexelFootprint::visible_count() const {
  return static_cast<std::size_t>(std::count_if(texels.begin(), texels.end(), [](const TexelInfo& t) { return t.visible; }));
}

std::size_t TexelFootprint::charted_count() const {
  return static_cast<std::size_t>(std::count_if(texels.begin(), texels.end(), [](const TexelInfo& t) { return t.charted; }));
}

Grid TexelFootprint::weight() const {
  Grid w(1, texture_size, texture_size, GridRole::mask);
  for (std::size_t i = 0; i < texels.size(); ++i) w.values()[i] = texels[i].visible ? 1.0f : 0.0f;
  return w;
}

Grid TexelFootprint::similarity() const {
  Grid s(1, texture_size, texture_size, GridRole::mask);
  for (std::size_t i = 0; i < texels.size(); ++i) {
    if (texels[i].visible) s.values()[i] = std::clamp(texels[i].normal_similarity, 0.0f, 1.0f);
  }
  return s;
}

TexelFootprint compute_footprints(const Mesh& mesh, const Camera& camera, const ViewBuffers& buffers,
                                  int texture_size) {
  if (texture_size <= 0) throw std::invalid_argument("texture size must be positive");
  const UvRaster raster = rasterize_uv(mesh, texture_size);
  const CameraFrame frame(camera.with_image_size(buffers.size));
  const double eps = kDepthEpsilonScale * bounding_box(mesh).diagonal();

  TexelFootprint fp;
  fp.texture_size = texture_size;
  fp.image_size = buffers.size;
  fp.texels.resize(raster.face.size());
  fp.image_foreground = buffers.foreground;

  parallel_for(0, texture_size, [&](int ty) {
    for (int tx = 0; tx < texture_size; ++tx) {
      const std::size_t i = static_cast<std::size_t>(ty) * texture_size + tx;
      const std::int32_t f = raster.face[i];
      if (f == kBackground) continue;
      TexelInfo& info = fp.texels[i];
      info.charted = true;
      const auto verts = mesh.corners(static_cast<std::size_t>(f));
      const auto& b = raster.barycentric[i];
      const Vec3 p = verts[0] * b[0] + verts[1] * b[1] + verts[2] * b[2];
      const Vec3 normal = mesh.face_normals[static_cast<std::size_t>(f)];
      const auto proj = frame.project(p);
      info.px = proj.px;
      info.py = proj.py;
      info.depth = length(p - frame.eye);
      info.normal_similarity = static_cast<float>(dot(normal, -frame.forward));

      if (proj.w <= 0.0 || dot(normal, frame.eye - p) <= 0.0) continue;
      if (!(proj.px >= 0.0 && proj.px < buffers.size && proj.py >= 0.0 && proj.py < buffers.size)) continue;
      const Vec3 dir = normalize(frame.ray_direction(proj.px, proj.py));
      // Same face, or z-buffer depth at the exact projected position (taken on the plane of the
      // pixel's face) within eps.
      auto seen_through = [&](int x, int y) {
        const std::int32_t owner = buffers.face_id[buffers.index(x, y)];
        if (owner == kBackground) return false;
        if (owner == f) return true;
        const Vec3 owner_normal = mesh.face_normals[static_cast<std::size_t>(owner)];
        const double denom = dot(owner_normal, dir);
        const double zdepth =
            std::abs(denom) > 1e-12
                ? dot(owner_normal, mesh.positions[mesh.triangles[static_cast<std::size_t>(owner)][0]] - frame.eye) / denom
                : buffers.depth[buffers.index(x, y)];
        return std::abs(info.depth - zdepth) <= eps;
      };
      const int ox = static_cast<int>(proj.px);
      const int oy = static_cast<int>(proj.py);
      if (buffers.face_id[buffers.index(ox, oy)] != kBackground) {
        info.visible = seen_through(ox, oy);
        continue;
      }
      // Silhouette texels whose own pixel is background: seen if a bilinear tap is.
      const int x0 = static_cast<int>(std::floor(proj.px - 0.5));
      const int y0 = static_cast<int>(std::floor(proj.py - 0.5));
      for (int dy = 0; dy <= 1 && !info.visible; ++dy) {
        for (int dx = 0; dx <= 1 && !info.visible; ++dx) {
          const int x = x0 + dx, y = y0 + dy;
          if (x >= 0 && y >= 0 && x < buffers.size && y < buffers.size) info.visible = seen_through(x, y);
        }
      }
    }
  });
  return fp;
}

InverseRendered inverse_render(const Grid& image, const TexelFootprint& fp) {
  if (!is_image_role(image.role())) {
    throw std::invalid_argument("inverse_render expects an image grid, got " + std::string(to_string(image.role())));
  }
  if (image.width() != image.height() || image.width() <= 0 || fp.image_size % image.width() != 0) {
    throw std::invalid_argument("image size must evenly divide the footprint resolution");
  }
  const int factor = fp.image_size / image.width();
  const int size = image.width();

  // An image pixel is a valid tap when any of its full-resolution sub-pixels is foreground.
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(size) * size, 0);
  for (int y = 0; y < fp.image_size; ++y) {
    for (int x = 0; x < fp.image_size; ++x) {
      if (fp.image_foreground[static_cast<std::size_t>(y) * fp.image_size + x]) {
        valid[static_cast<std::size_t>(y / factor) * size + x / factor] = 1;
      }
    }
  }

  const int ts = fp.texture_size;
  InverseRendered out{Grid(image.channels(), ts, ts, texture_role_for(image.role())), Grid(1, ts, ts, GridRole::mask)};
  std::vector<std::uint8_t> known(fp.texels.size(), 0);
  parallel_for(0, ts, [&](int ty) {
    for (int tx = 0; tx < ts; ++tx) {
      const std::size_t i = static_cast<std::size_t>(ty) * ts + tx;
      const TexelInfo& t = fp.texels[i];
      if (!t.visible) continue;
      const double fx = t.px / factor - 0.5;
      const double fy = t.py / factor - 0.5;
      const int x0 = static_cast<int>(std::floor(fx));
      const int y0 = static_cast<int>(std::floor(fy));
      const double ax = fx - x0;
      const double ay = fy - y0;
      int xs[4], ys[4];
      double ws[4];
      int taps = 0;
      double wsum = 0.0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int x = std::clamp(x0 + dx, 0, size - 1);
          const int y = std::clamp(y0 + dy, 0, size - 1);
          const double w = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
          if (w == 0.0 || !valid[static_cast<std::size_t>(y) * size + x]) continue;
          xs[taps] = x;
          ys[taps] = y;
          ws[taps] = w;
          wsum += w;
          ++taps;
        }
      }
      if (taps == 0) {
        xs[0] = std::clamp(static_cast<int>(t.px / factor), 0, size - 1);
        ys[0] = std::clamp(static_cast<int>(t.py / factor), 0, size - 1);
        ws[0] = 1.0;
        wsum = 1.0;
        taps = 1;
      }
      for (int c = 0; c < image.channels(); ++c) {
        double v = 0.0;
        for (int k = 0; k < taps; ++k) v += ws[k] * image.at(c, ys[k], xs[k]);
        out.texture.at(c, ty, tx) = static_cast<float>(v / wsum);
      }
      out.weight.at(0, ty, tx) = 1.0f;
      known[i] = 1;
    }
  });
  dilate_values(out.texture, known, kSeamDilation);
  return out;
}

void dilate_values(Grid& grid, const std::vector<std::uint8_t>& known, int passes) {
  const int w = grid.width();
  const int h = grid.height();
  std::vector<std::uint8_t> filled = known;
  std::vector<std::uint8_t> next;
  for (int pass = 0; pass < passes; ++pass) {
    next = filled;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (filled[i]) continue;
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            if (filled[static_cast<std::size_t>(ny) * w + nx]) ++count;
          }
        }
        if (count == 0) continue;
        for (int c = 0; c < grid.channels(); ++c) {
          double sum = 0.0;
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = x + dx, ny = y + dy;
              if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
              if (filled[static_cast<std::size_t>(ny) * w + nx]) sum += grid.at(c, ny, nx);
            }
          }
          grid.at(c, y, x) = static_cast<float>(sum / count);
        }
        next[i] = 1;
      }
    }
    filled.swap(next);
  }
}

Grid downsample_mask(const Grid& mask, int factor) {
  if (factor <= 0 || mask.height() % factor != 0 || mask.width() % factor != 0) {
    throw std::invalid_argument("downsample factor must divide the mask dimensions");
  }
  const int h = mask.height() / factor;
  const int w = mask.width() / factor;
  Grid out(mask.channels(), h, w, mask.role());
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int c = 0; c < mask.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double sum = 0.0;
        for (int dy = 0; dy < factor; ++dy) {
          for (int dx = 0; dx < factor; ++dx) sum += mask.at(c, y * factor + dy, x * factor + dx);
        }
        out.at(c, y, x) = static_cast<float>(sum * inv);
      }
    }
  }
  return out;
}

}  // namespace gtex
