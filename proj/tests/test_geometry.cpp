#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <random>
#include <string>

#include "gtex/geometry.hpp"
#include "gtex/log.hpp"
#include "gtex/uv_raster.hpp"
#include "oracles.hpp"

using namespace gtex;

namespace {

std::filesystem::path write_text(const std::filesystem::path& dir, const std::string& name, const std::string& body) {
  const auto p = dir / name;
  std::ofstream(p) << body;
  return p;
}

const char* kQuadObj =
    "v -1 -1 0\nv 1 -1 0\nv 1 1 0\nv -1 1 0\n"
    "vt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\n"
    "f 1/1 2/2 3/3\nf 1/1 3/3 4/4\n";

struct CapturedWarnings {
  std::vector<std::string> messages;
  WarningHandler previous;
  CapturedWarnings() {
    previous = set_warning_handler([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~CapturedWarnings() { set_warning_handler(previous); }
};

Camera camera_for(double el, double az, double distance = 2.0, int size = 128, double fov = 45.0) {
  Camera c;
  c.elevation = el;
  c.azimuth = az;
  c.distance = distance;
  c.image_size = size;
  c.fov_y = fov;
  return c;
}

// Quad of half extent h filling the image exactly when seen head-on from `distance`.
double fullscreen_distance(double h, double fov = 45.0) { return h / std::tan(fov * std::numbers::pi / 360.0); }

}  // namespace

TEST_CASE("load_mesh reads a unit quad") {
  const auto dir = oracle::temp_dir("geometry_quad");
  const Mesh m = load_mesh(write_text(dir, "quad.obj", kQuadObj));
  CHECK(m.vertex_count() == 4);
  CHECK(m.face_count() == 2);
  for (const Vec3& n : m.face_normals) CHECK(n.z == doctest::Approx(1.0));
}

TEST_CASE("load_mesh fan-triangulates quads and accepts v/vt/vn and negative indices") {
  const auto dir = oracle::temp_dir("geometry_fan");
  const Mesh m = load_mesh(write_text(dir, "fan.obj",
                                      "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nvn 0 0 1\n"
                                      "f -4/-4/1 -3/-3/1 -2/-2/1 -1/-1/1\n"));
  CHECK(m.face_count() == 2);
  CHECK(m.triangles[1] == std::array<std::uint32_t, 3>{0, 2, 3});
}

TEST_CASE("load_mesh rejects out-of-range indices and missing UVs") {
  const auto dir = oracle::temp_dir("geometry_bad");
  const auto bad_index = write_text(dir, "bad.obj",
                                    "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nf 1/1 2/2 99/3\n");
  CHECK_THROWS_WITH(load_mesh(bad_index), doctest::Contains("vertex index 99 of 4"));
  const auto no_uv = write_text(dir, "nouv.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 3\n");
  CHECK_THROWS_WITH(load_mesh(no_uv), "mesh lacks UV parameterization");
  CHECK_THROWS(load_mesh(dir / "missing.obj"));
}

TEST_CASE("load_mesh warns on non-manifold edges and drops degenerate faces") {
  const auto dir = oracle::temp_dir("geometry_warn");
  CapturedWarnings warnings;
  const Mesh fan = load_mesh(write_text(dir, "fin.obj",
                                        "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\n"
                                        "vt 0 0\nvt 0.1 0\nvt 0 0.1\nvt 0.5 0.5\nvt 0.6 0.5\nvt 0.5 0.6\nvt 0.8 0.8\nvt 0.9 0.8\nvt 0.8 0.9\n"
                                        "f 1/1 2/2 3/3\nf 2/4 1/5 4/6\nf 1/7 2/8 5/9\n"));
  CHECK(fan.face_count() == 3);
  CHECK(std::any_of(warnings.messages.begin(), warnings.messages.end(),
                    [](const std::string& m) { return m.find("non-manifold") != std::string::npos; }));
  warnings.messages.clear();
  const Mesh degenerate = load_mesh(write_text(dir, "degenerate.obj",
                                               "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\n"
                                               "vt 0 0\nvt 1 0\nvt 0 1\n"
                                               "f 1/1 2/2 3/3\nf 1/1 2/2 4/3\n"));
  CHECK(degenerate.face_count() == 1);
  CHECK_FALSE(warnings.messages.empty());
}

TEST_CASE("icosphere normals match independent cross products") {
  const auto dir = oracle::temp_dir("geometry_ico");
  const Mesh source = make_icosphere(2, 1.0);
  REQUIRE(source.face_count() == 320);
  write_obj(dir / "ico.obj", source);
  const Mesh m = load_mesh(dir / "ico.obj");
  REQUIRE(m.face_count() == 320);
  for (std::size_t f = 0; f < m.face_count(); ++f) {
    const auto& t = m.triangles[f];
    const Vec3 a = m.positions[t[0]], b = m.positions[t[1]], c = m.positions[t[2]];
    const double ex = (b.y - a.y) * (c.z - a.z) - (b.z - a.z) * (c.y - a.y);
    const double ey = (b.z - a.z) * (c.x - a.x) - (b.x - a.x) * (c.z - a.z);
    const double ez = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    const double len = std::sqrt(ex * ex + ey * ey + ez * ez);
    const Vec3 n = m.face_normals[f];
    CHECK(length(n) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(n.x == doctest::Approx(ex / len).epsilon(1e-9));
    CHECK(n.y == doctest::Approx(ey / len).epsilon(1e-9));
    CHECK(n.z == doctest::Approx(ez / len).epsilon(1e-9));
    // Outward winding on a sphere centered at the origin.
    CHECK(dot(n, a + b + c) > 0.0);
  }
}

TEST_CASE("procedural meshes have non-overlapping in-range UVs") {
  for (const Mesh& m : {make_quad(1.0), make_cube(1.0), make_icosphere(2, 1.0), make_icosphere(3, 1.0)}) {
    for (const auto& corners : m.uv_corners) {
      for (const Vec2& uv : corners) {
        CHECK(uv.x >= 0.0);
        CHECK(uv.x <= 1.0);
        CHECK(uv.y >= 0.0);
        CHECK(uv.y <= 1.0);
      }
    }
    CHECK(uv_overlap_fraction(m, 512) == 0.0);
  }
  CHECK_THROWS(make_icosphere(0, 1.0));
}

TEST_CASE("normalize_mesh centers the bounding box and scales its diagonal to one") {
  Mesh cube = make_cube(1.0);
  for (Vec3& p : cube.positions) p = p + Vec3{1, 1, 1};  // corners (0,0,0)-(2,2,2)
  const Mesh n = normalize_mesh(cube);
  const Bounds b = bounding_box(n);
  CHECK(b.diagonal() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(length(b.center()) < 1e-12);
  const double half = 0.5 / std::sqrt(3.0);
  CHECK(b.max.x == doctest::Approx(half));
  CHECK(b.min.y == doctest::Approx(-half));

  const Mesh again = normalize_mesh(n);
  for (std::size_t i = 0; i < n.positions.size(); ++i) CHECK(length(again.positions[i] - n.positions[i]) < 1e-7);

  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dist(-3.0, 5.0);
  Mesh cloud;
  for (int i = 0; i < 60; ++i) cloud.positions.push_back({dist(gen), dist(gen), dist(gen)});
  for (std::uint32_t i = 0; i + 2 < 60; i += 3) {
    cloud.triangles.push_back({i, i + 1, i + 2});
    cloud.uv_corners.push_back({Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}});
  }
  const Mesh nc = normalize_mesh(cloud);
  Vec3 lo = nc.positions.front(), hi = lo;
  for (const Vec3& p : nc.positions) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  CHECK(length(hi - lo) == doctest::Approx(1.0).epsilon(1e-6));

  Mesh flat;
  flat.positions = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  flat.triangles = {{0, 1, 2}};
  CHECK_THROWS(normalize_mesh(flat));
  CHECK_THROWS(normalize_mesh(Mesh{}));
}

TEST_CASE("camera validation") {
  CHECK_NOTHROW(camera_for(0, 0).validate(8));
  CHECK_THROWS(camera_for(91, 0).validate());
  CHECK_THROWS(camera_for(0, 360).validate());
  CHECK_THROWS(camera_for(0, -1).validate());
  CHECK_THROWS(camera_for(0, 0, 0.0).validate());
  CHECK_THROWS(camera_for(0, 0, 2.0, 100).validate(8));
  CHECK_THROWS(camera_for(0, 0, 2.0, 128, 180.0).validate());
}

TEST_CASE("fullscreen quad facing the camera covers every pixel with similarity one") {
  const Mesh quad = make_quad(0.5);
  const ViewBuffers b = rasterize_view(quad, camera_for(0, 0, fullscreen_distance(0.5)));
  CHECK(b.foreground_count() == static_cast<std::size_t>(b.size) * b.size);
  for (float s : b.normal_similarity) CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("quad seen from azimuth 60 has similarity cos 60") {
  const Mesh quad = make_quad(0.5);
  const ViewBuffers b = rasterize_view(quad, camera_for(0, 60));
  REQUIRE(b.foreground_count() > 0);
  for (std::size_t i = 0; i < b.foreground.size(); ++i) {
    if (b.foreground[i]) CHECK(b.normal_similarity[i] == doctest::Approx(0.5).epsilon(1e-3));
  }
}

TEST_CASE("icosphere foreground matches a brute-force ray caster") {
  const Mesh sphere = normalize_mesh(make_icosphere(2, 1.0));
  const Camera cam = camera_for(0, 0, 2.0, 128);
  const ViewBuffers b = rasterize_view(sphere, cam);
  const auto basis = oracle::camera_basis(0, 0, 2.0, 45.0);
  std::size_t hits = 0;
  std::size_t agree = 0;
  for (int y = 0; y < cam.image_size; ++y) {
    for (int x = 0; x < cam.image_size; ++x) {
      const auto hit = oracle::ray_cast(sphere, basis.eye, oracle::pixel_ray(basis, cam.image_size, x + 0.5, y + 0.5));
      if (hit.face >= 0) ++hits;
      if ((hit.face >= 0) == (b.foreground[b.index(x, y)] != 0)) ++agree;
      if (hit.face >= 0 && b.face_id[b.index(x, y)] == hit.face) {
        CHECK(b.depth[b.index(x, y)] == doctest::Approx(hit.t).epsilon(1e-5));
      }
    }
  }
  const double ratio = static_cast<double>(b.foreground_count()) / static_cast<double>(hits);
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.005));
  CHECK(agree >= static_cast<std::size_t>(0.995 * cam.image_size * cam.image_size));
}

TEST_CASE("view buffer invariants") {
  const Mesh sphere = normalize_mesh(make_icosphere(2, 1.0));
  for (double az : {0.0, 45.0, 200.0}) {
    const ViewBuffers b = rasterize_view(sphere, camera_for(30, az, 2.0, 96));
    for (std::size_t i = 0; i < b.face_id.size(); ++i) {
      const bool bg = b.face_id[i] == kBackground;
      CHECK(bg == (b.foreground[i] == 0));
      CHECK(bg == std::isinf(b.depth[i]));
      if (bg) {
        CHECK(b.normal_similarity[i] == 0.0f);
        continue;
      }
      const auto& w = b.barycentric[i];
      CHECK(w[0] >= 0.0f);
      CHECK(w[1] >= 0.0f);
      CHECK(w[2] >= 0.0f);
      CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-5));
      CHECK(b.normal_similarity[i] > 0.0f);  // convex mesh
    }
  }
}

TEST_CASE("rasterization is deterministic") {
  const Mesh sphere = normalize_mesh(make_icosphere(3, 1.0));
  const Camera cam = camera_for(20, 75, 2.0, 256);
  const ViewBuffers a = rasterize_view(sphere, cam);
  const ViewBuffers b = rasterize_view(sphere, cam);
  CHECK(a.face_id == b.face_id);
  CHECK(a.depth == b.depth);
  CHECK(a.barycentric == b.barycentric);
  CHECK(a.normal_similarity == b.normal_similarity);
}

TEST_CASE("rotating mesh and camera together preserves the foreground count") {
  const Mesh cube = normalize_mesh(make_cube(1.0));
  const double angle = 37.0;
  const double c = std::cos(angle * std::numbers::pi / 180.0);
  const double s = std::sin(angle * std::numbers::pi / 180.0);
  Mesh rotated = cube;
  for (Vec3& p : rotated.positions) p = {c * p.x + s * p.z, p.y, -s * p.x + c * p.z};
  compute_face_normals(rotated);
  const auto a = rasterize_view(cube, camera_for(20, 10, 2.0, 256)).foreground_count();
  const auto b = rasterize_view(rotated, camera_for(20, 10 + angle, 2.0, 256)).foreground_count();
  CHECK(static_cast<double>(b) == doctest::Approx(static_cast<double>(a)).epsilon(0.005));
}

TEST_CASE("two stacked quads: the nearer face wins the depth test") {
  Mesh m = make_quad(0.5);
  const Mesh back = make_quad(0.5);
  const auto base = static_cast<std::uint32_t>(m.positions.size());
  for (Vec3 p : back.positions) m.positions.push_back(p + Vec3{0, 0, -0.2});
  for (auto t : back.triangles) m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  m.uv_corners.insert(m.uv_corners.end(), back.uv_corners.begin(), back.uv_corners.end());
  compute_face_normals(m);
  const ViewBuffers b = rasterize_view(m, camera_for(0, 0, 2.0, 64));
  for (std::size_t i = 0; i < b.face_id.size(); ++i) {
    if (b.foreground[i]) CHECK(b.face_id[i] < 2);
  }
}

TEST_CASE("camera inside the bounding sphere warns but proceeds") {
  CapturedWarnings warnings;
  const Mesh sphere = normalize_mesh(make_icosphere(1, 1.0));
  const ViewBuffers b = rasterize_view(sphere, camera_for(0, 0, 0.1, 32));
  CHECK(b.size == 32);
  CHECK_FALSE(warnings.messages.empty());
}

TEST_CASE("OBJ export round trip preserves geometry and UVs") {
  const auto dir = oracle::temp_dir("geometry_roundtrip");
  const Mesh cube = make_cube(0.7);
  write_obj(dir / "cube.obj", cube);
  const Mesh back = load_mesh(dir / "cube.obj");
  REQUIRE(back.face_count() == cube.face_count());
  for (std::size_t f = 0; f < cube.face_count(); ++f) {
    for (int k = 0; k < 3; ++k) {
      CHECK(length(back.corners(f)[k] - cube.corners(f)[k]) < 1e-6);
      CHECK(std::abs(back.uv_corners[f][k].x - cube.uv_corners[f][k].x) < 1e-6);
      CHECK(std::abs(back.uv_corners[f][k].y - cube.uv_corners[f][k].y) < 1e-6);
    }
  }
}

TEST_CASE("UV rasterization covers each chart texel exactly once") {
  const Mesh quad = make_quad(1.0);
  const UvRaster r = rasterize_uv(quad, 64);
  CHECK(r.charted_count() == 64u * 64u);
  CHECK(r.overlapping == 0);
}

TEST_CASE("shared edges leave no cracks") {
  // A pixel whose center lies strictly inside the projected quad must be covered by one of its two
  // triangles, including centers exactly on the diagonal.
  const Mesh quad = normalize_mesh(make_quad(0.5));
  for (int size : {64, 100, 512}) {
    for (const auto& [el, az] : std::vector<std::pair<double, double>>{{0, 0}, {0, 30}, {10, 0}, {10, 45}, {-20, 300}}) {
      const Camera cam = camera_for(el, az, 2.0, size);
      const ViewBuffers b = rasterize_view(quad, cam);
      const auto basis = oracle::camera_basis(cam.elevation, cam.azimuth, cam.distance, cam.fov_y);
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const Vec3 dir = oracle::pixel_ray(basis, size, x + 0.5, y + 0.5);
          // Ray-plane intersection with the z = 0 quad, well inside its border.
          const double t = -basis.eye.z / dir.z;
          const Vec3 p = basis.eye + dir * t;
          const double half = std::abs(quad.positions[0].x);
          if (std::abs(p.x) < half - 1e-3 && std::abs(p.y) < half - 1e-3) CHECK(b.foreground[b.index(x, y)] == 1);
        }
      }
    }
  }
  for (int ts : {7, 64, 333, 1024}) CHECK(rasterize_uv(quad, ts).charted_count() == static_cast<std::size_t>(ts) * ts);
}
