#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "gtex/grid.hpp"
#include "gtex/math.hpp"

namespace gtex {

// Triangle mesh with per-corner UVs. UV (0,0) is the bottom-left of the texture, matching
// Wavefront OBJ; texture grids store row 0 at v = 1.
struct Mesh {
  std::vector<Vec3> positions;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<std::array<Vec2, 3>> uv_corners;
  std::vector<Vec3> face_normals;

  std::size_t vertex_count() const { return positions.size(); }
  std::size_t face_count() const { return triangles.size(); }
  std::array<Vec3, 3> corners(std::size_t face) const {
    const auto& t = triangles[face];
    return {positions[t[0]], positions[t[1]], positions[t[2]]};
  }
};

struct Bounds {
  Vec3 min;
  Vec3 max;
  Vec3 center() const { return (min + max) * 0.5; }
  double diagonal() const { return length(max - min); }
};

Bounds bounding_box(const Mesh& mesh);
// Radius of the smallest origin-centered sphere containing every vertex.
double bounding_radius(const Mesh& mesh);

// Recomputes unit face normals from counter-clockwise winding.
void compute_face_normals(Mesh& mesh);

// Checks index bounds, UV range and degeneracy. Degenerate faces are dropped with a warning;
// overlapping UV triangles and non-manifold edges are reported as warnings.
void validate_mesh(Mesh& mesh);

// Fraction of UV-covered texels (at the given resolution) claimed by more than one triangle.
double uv_overlap_fraction(const Mesh& mesh, int resolution);

Mesh load_mesh(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const Mesh& mesh);

// Centers the bounding box at the origin and scales its diagonal to 1.
Mesh normalize_mesh(const Mesh& mesh);

struct Camera {
  double elevation = 0.0;  // degrees, [-90, 90]
  double azimuth = 0.0;    // degrees, [0, 360)
  double distance = 2.0;
  double fov_y = 45.0;     // degrees
  int image_size = 512;

  void validate(int downsample_factor = 1) const;
  Camera with_image_size(int size) const {
    Camera c = *this;
    c.image_size = size;
    return c;
  }
};

// Look-at-origin pinhole camera frame. Azimuth 0 / elevation 0 sits on +Z looking down -Z with
// +Y up; azimuth rotates towards +X, elevation towards +Y.
struct CameraFrame {
  Vec3 eye;
  Vec3 right;
  Vec3 up;
  Vec3 forward;
  double tan_half_fov = 0.0;
  int image_size = 0;

  explicit CameraFrame(const Camera& camera);

  struct Projection {
    double px = 0.0;  // continuous pixel coordinates, y down
    double py = 0.0;
    double w = 0.0;   // depth along the forward axis
  };
  Projection project(Vec3 p) const;
  // World-space direction of the ray through continuous pixel coordinates (not normalized).
  Vec3 ray_direction(double px, double py) const;
};

inline constexpr std::int32_t kBackground = -1;

struct ViewBuffers {
  int size = 0;
  std::vector<std::int32_t> face_id;
  std::vector<std::array<float, 3>> barycentric;
  std::vector<float> depth;  // distance along the view ray, +inf on background
  std::vector<std::uint8_t> foreground;
  std::vector<float> normal_similarity;

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * size + x; }
  std::size_t foreground_count() const;
  Grid foreground_grid() const;
  Grid similarity_grid() const;
};

ViewBuffers rasterize_view(const Mesh& mesh, const Camera& camera);

// Procedural test and demo meshes, all with valid non-overlapping UVs and outward winding.
Mesh make_quad(double half_extent);
Mesh make_cube(double half_extent);
Mesh make_icosphere(int subdivisions, double radius);

}  // namespace gtex
