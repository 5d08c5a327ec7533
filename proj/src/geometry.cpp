#include "gtex/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "gtex/log.hpp"
#include "gtex/parallel.hpp"
#include "gtex/uv_raster.hpp"

namespace gtex {

Bounds bounding_box(const Mesh& mesh) {
  if (mesh.positions.empty()) throw std::invalid_argument("bounding_box: empty mesh");
  Bounds b{mesh.positions.front(), mesh.positions.front()};
  for (const Vec3& p : mesh.positions) {
    b.min = {std::min(b.min.x, p.x), std::min(b.min.y, p.y), std::min(b.min.z, p.z)};
    b.max = {std::max(b.max.x, p.x), std::max(b.max.y, p.y), std::max(b.max.z, p.z)};
  }
  return b;
}

double bounding_radius(const Mesh& mesh) {
  double r = 0.0;
  for (const Vec3& p : mesh.positions) r = std::max(r, length(p));
  return r;
}

void compute_face_normals(Mesh& mesh) {
  mesh.face_normals.resize(mesh.triangles.size());
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto [a, b, c] = mesh.corners(f);
    mesh.face_normals[f] = normalize(cross(b - a, c - a));
  }
}

double uv_overlap_fraction(const Mesh& mesh, int resolution) {
  const UvRaster raster = rasterize_uv(mesh, resolution);
  const std::size_t charted = raster.charted_count();
  return charted == 0 ? 0.0 : static_cast<double>(raster.overlapping) / static_cast<double>(charted);
}

void validate_mesh(Mesh& mesh) {
  if (mesh.positions.empty() || mesh.triangles.empty()) throw std::invalid_argument("mesh has no triangles");
  if (mesh.uv_corners.size() != mesh.triangles.size()) throw std::invalid_argument("mesh lacks UV parameterization");
  const std::size_t n = mesh.positions.size();
  for (const auto& t : mesh.triangles) {
    for (std::uint32_t i : t) {
      if (i >= n) {
        throw std::invalid_argument("triangle references vertex " + std::to_string(i + 1) + " of " +
                                    std::to_string(n));
      }
    }
  }
  for (const auto& uvs : mesh.uv_corners) {
    for (const Vec2& uv : uvs) {
      if (!(uv.x >= 0.0 && uv.x <= 1.0 && uv.y >= 0.0 && uv.y <= 1.0)) {
        throw std::invalid_argument("UV coordinate outside [0,1]");
      }
    }
  }

  // Drop degenerate faces.
  std::size_t kept = 0;
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto [a, b, c] = mesh.corners(f);
    if (0.5 * length(cross(b - a, c - a)) > 1e-12) {
      mesh.triangles[kept] = mesh.triangles[f];
      mesh.uv_corners[kept] = mesh.uv_corners[f];
      ++kept;
    }
  }
  if (kept != mesh.triangles.size()) {
    warn("dropped " + std::to_string(mesh.triangles.size() - kept) + " degenerate triangle(s)");
    mesh.triangles.resize(kept);
    mesh.uv_corners.resize(kept);
  }
  if (kept == 0) throw std::invalid_argument("mesh has no non-degenerate triangles");
  compute_face_normals(mesh);

  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      auto key = std::minmax(t[e], t[(e + 1) % 3]);
      ++edge_use[{key.first, key.second}];
    }
  }
  const auto non_manifold =
      std::count_if(edge_use.begin(), edge_use.end(), [](const auto& kv) { return kv.second > 2; });
  if (non_manifold > 0) warn("mesh has " + std::to_string(non_manifold) + " non-manifold edge(s)");

  const double overlap = uv_overlap_fraction(mesh, 512);
  if (overlap > 0.0) warn("UV triangles overlap on " + std::to_string(overlap * 100.0) + "% of charted texels");
}

namespace {

double parse_double(std::string_view token, int line) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error("OBJ line " + std::to_string(line) + ": bad number '" + std::string(token) + "'");
  }
  return value;
}

long parse_index(std::string_view token, int line) {
  long value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw std::runtime_error("OBJ line " + std::to_string(line) + ": bad index '" + std::string(token) + "'");
  }
  return value;
}

// Resolves a 1-based (or negative, relative) OBJ index against the current element count.
std::uint32_t resolve_index(long index, std::size_t count, const char* what, int line) {
  const long resolved = index > 0 ? index - 1 : static_cast<long>(count) + index;
  if (resolved < 0 || static_cast<std::size_t>(resolved) >= count) {
    throw std::runtime_error("OBJ line " + std::to_string(line) + ": face references " + what + " index " +
                             std::to_string(index) + " of " + std::to_string(count));
  }
  return static_cast<std::uint32_t>(resolved);
}

}  // namespace

Mesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path.string());

  Mesh mesh;
  std::vector<Vec2> uvs;
  std::string line;
  int line_no = 0;
  bool missing_uv = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag.front() == '#') continue;
    if (tag == "v") {
      std::string x, y, z;
      if (!(ss >> x >> y >> z)) throw std::runtime_error("OBJ line " + std::to_string(line_no) + ": bad vertex");
      mesh.positions.push_back({parse_double(x, line_no), parse_double(y, line_no), parse_double(z, line_no)});
    } else if (tag == "vt") {
      std::string u, v;
      if (!(ss >> u >> v)) throw std::runtime_error("OBJ line " + std::to_string(line_no) + ": bad texcoord");
      uvs.push_back({parse_double(u, line_no), parse_double(v, line_no)});
    } else if (tag == "f") {
      std::vector<std::uint32_t> vi;
      std::vector<Vec2> vt;
      std::string corner;
      while (ss >> corner) {
        const auto slash = corner.find('/');
        vi.push_back(resolve_index(parse_index(std::string_view(corner).substr(0, slash), line_no),
                                   mesh.positions.size(), "vertex", line_no));
        std::string_view rest = slash == std::string::npos ? std::string_view{} : std::string_view(corner).substr(slash + 1);
        const auto slash2 = rest.find('/');
        const std::string_view uv_token = rest.substr(0, slash2);
        if (uv_token.empty()) {
          missing_uv = true;
        } else {
          vt.push_back(uvs[resolve_index(parse_index(uv_token, line_no), uvs.size(), "texcoord", line_no)]);
        }
      }
      if (vi.size() < 3) throw std::runtime_error("OBJ line " + std::to_string(line_no) + ": face with < 3 corners");
      if (missing_uv) continue;
      for (std::size_t k = 1; k + 1 < vi.size(); ++k) {
        mesh.triangles.push_back({vi[0], vi[k], vi[k + 1]});
        mesh.uv_corners.push_back({vt[0], vt[k], vt[k + 1]});
      }
    }
  }
  if (missing_uv || uvs.empty()) throw std::runtime_error("mesh lacks UV parameterization");
  validate_mesh(mesh);
  return mesh;
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.precision(17);
  for (const Vec3& p : mesh.positions) out << "v " << p.x << ' ' << p.y << ' ' << p.z << '\n';
  for (const auto& uvs : mesh.uv_corners) {
    for (const Vec2& uv : uvs) out << "vt " << uv.x << ' ' << uv.y << '\n';
  }
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    out << 'f';
    for (int k = 0; k < 3; ++k) out << ' ' << mesh.triangles[f][k] + 1 << '/' << 3 * f + k + 1;
    out << '\n';
  }
}

Mesh normalize_mesh(const Mesh& mesh) {
  const Bounds b = bounding_box(mesh);
  const double diag = b.diagonal();
  if (!(diag > 0.0)) throw std::invalid_argument("cannot normalize a zero-extent mesh");
  const Vec3 center = b.center();
  Mesh out = mesh;
  for (Vec3& p : out.positions) p = (p - center) / diag;
  return out;
}

void Camera::validate(int downsample_factor) const {
  if (!(elevation >= -90.0 && elevation <= 90.0)) throw std::invalid_argument("camera elevation outside [-90, 90]");
  if (!(azimuth >= 0.0 && azimuth < 360.0)) throw std::invalid_argument("camera azimuth outside [0, 360)");
  if (!(distance > 0.0)) throw std::invalid_argument("camera distance must be positive");
  if (!(fov_y > 0.0 && fov_y < 180.0)) throw std::invalid_argument("camera fov outside (0, 180)");
  if (image_size <= 0 || downsample_factor <= 0 || image_size % downsample_factor != 0) {
    throw std::invalid_argument("camera image size must be positive and divisible by the latent factor");
  }
}

CameraFrame::CameraFrame(const Camera& camera) : image_size(camera.image_size) {
  const double el = radians(camera.elevation);
  const double az = radians(camera.azimuth);
  const Vec3 dir{std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)};
  eye = dir * camera.distance;
  forward = -dir;
  // d(dir)/d(elevation): orthogonal to dir and well defined at the poles.
  up = Vec3{-std::sin(el) * std::sin(az), std::cos(el), -std::sin(el) * std::cos(az)};
  right = cross(forward, up);
  tan_half_fov = std::tan(radians(camera.fov_y) * 0.5);
}

CameraFrame::Projection CameraFrame::project(Vec3 p) const {
  const Vec3 d = p - eye;
  const double w = dot(d, forward);
  const double x_ndc = dot(d, right) / (w * tan_half_fov);
  const double y_ndc = dot(d, up) / (w * tan_half_fov);
  return {(x_ndc + 1.0) * 0.5 * image_size, (1.0 - y_ndc) * 0.5 * image_size, w};
}

Vec3 CameraFrame::ray_direction(double px, double py) const {
  const double x_ndc = 2.0 * px / image_size - 1.0;
  const double y_ndc = 1.0 - 2.0 * py / image_size;
  return forward + right * (x_ndc * tan_half_fov) + up * (y_ndc * tan_half_fov);
}

std::size_t ViewBuffers::foreground_count() const {
  return static_cast<std::size_t>(std::count(foreground.begin(), foreground.end(), std::uint8_t{1}));
}

Grid ViewBuffers::foreground_grid() const {
  Grid g(1, size, size, GridRole::mask);
  for (std::size_t i = 0; i < foreground.size(); ++i) g.values()[i] = foreground[i];
  return g;
}

Grid ViewBuffers::similarity_grid() const {
  Grid g(1, size, size, GridRole::mask);
  std::copy(normal_similarity.begin(), normal_similarity.end(), g.values().begin());
  return g;
}

namespace {

struct ScreenTriangle {
  std::int32_t face = 0;
  std::array<Vec2, 3> p;      // screen positions, reordered so the signed area is positive
  std::array<int, 3> corner;  // original corner index of each reordered vertex
  std::array<double, 3> inv_w;
  double area = 0.0;
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // inclusive pixel bounds
};

// Top-left rule for positive-area triangles in y-down pixel coordinates.
bool is_top_left(Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

}  // namespace

ViewBuffers rasterize_view(const Mesh& mesh, const Camera& camera) {
  camera.validate();
  const CameraFrame frame(camera);
  const int size = camera.image_size;
  if (camera.distance <= bounding_radius(mesh)) warn("camera lies inside the mesh bounding sphere");

  std::vector<ScreenTriangle> tris;
  tris.reserve(mesh.triangles.size());
  bool clipped = false;
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto verts = mesh.corners(f);
    ScreenTriangle t;
    t.face = static_cast<std::int32_t>(f);
    bool behind = false;
    for (int k = 0; k < 3; ++k) {
      const auto pr = frame.project(verts[k]);
      if (pr.w <= 1e-9) behind = true;
      t.p[k] = {pr.px, pr.py};
      t.inv_w[k] = 1.0 / pr.w;
      t.corner[k] = k;
    }
    if (behind) {
      clipped = true;
      continue;
    }
    t.area = cross2(t.p[0], t.p[1], t.p[2]);
    if (t.area == 0.0) continue;
    if (t.area < 0.0) {
      std::swap(t.p[1], t.p[2]);
      std::swap(t.inv_w[1], t.inv_w[2]);
      std::swap(t.corner[1], t.corner[2]);
      t.area = -t.area;
    }
    const double minx = std::min({t.p[0].x, t.p[1].x, t.p[2].x});
    const double maxx = std::max({t.p[0].x, t.p[1].x, t.p[2].x});
    const double miny = std::min({t.p[0].y, t.p[1].y, t.p[2].y});
    const double maxy = std::max({t.p[0].y, t.p[1].y, t.p[2].y});
    // Pixel x is covered when its center x + 0.5 lies in [minx, maxx].
    t.x0 = std::max(0, static_cast<int>(std::ceil(minx - 0.5)));
    t.x1 = std::min(size - 1, static_cast<int>(std::floor(maxx - 0.5)));
    t.y0 = std::max(0, static_cast<int>(std::ceil(miny - 0.5)));
    t.y1 = std::min(size - 1, static_cast<int>(std::floor(maxy - 0.5)));
    if (t.x0 > t.x1 || t.y0 > t.y1) continue;
    tris.push_back(t);
  }
  if (clipped) warn("triangles behind the camera plane were skipped");

  // Bin triangles into row bands so bands can be rasterized independently.
  constexpr int kBand = 16;
  const int bands = (size + kBand - 1) / kBand;
  std::vector<std::vector<std::uint32_t>> band_tris(bands);
  for (std::uint32_t i = 0; i < tris.size(); ++i) {
    for (int b = tris[i].y0 / kBand; b <= tris[i].y1 / kBand; ++b) band_tris[b].push_back(i);
  }

  ViewBuffers out;
  out.size = size;
  const std::size_t n = static_cast<std::size_t>(size) * size;
  out.face_id.assign(n, kBackground);
  out.barycentric.assign(n, {0.0f, 0.0f, 0.0f});
  out.depth.assign(n, std::numeric_limits<float>::infinity());
  out.foreground.assign(n, 0);
  out.normal_similarity.assign(n, 0.0f);
  std::vector<double> zbuf(n, std::numeric_limits<double>::infinity());

  parallel_for(0, bands, [&](int band) {
    const int row0 = band * kBand;
    const int row1 = std::min(size, row0 + kBand);
    for (std::uint32_t ti : band_tris[band]) {
      const ScreenTriangle& t = tris[ti];
      const auto verts = mesh.corners(static_cast<std::size_t>(t.face));
      const bool tl0 = is_top_left(t.p[1], t.p[2]);
      const bool tl1 = is_top_left(t.p[2], t.p[0]);
      const bool tl2 = is_top_left(t.p[0], t.p[1]);
      for (int y = std::max(row0, t.y0); y <= std::min(row1 - 1, t.y1); ++y) {
        for (int x = t.x0; x <= t.x1; ++x) {
          const Vec2 pc{x + 0.5, y + 0.5};
          const double e0 = edge_function(t.p[1], t.p[2], pc);
          const double e1 = edge_function(t.p[2], t.p[0], pc);
          const double e2 = edge_function(t.p[0], t.p[1], pc);
          if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
          if ((e0 == 0.0 && !tl0) || (e1 == 0.0 && !tl1) || (e2 == 0.0 && !tl2)) continue;
          // Perspective-correct barycentrics.
          const double q0 = e0 * t.inv_w[0];
          const double q1 = e1 * t.inv_w[1];
          const double q2 = e2 * t.inv_w[2];
          const double qs = q0 + q1 + q2;
          std::array<double, 3> bary{};
          bary[t.corner[0]] = q0 / qs;
          bary[t.corner[1]] = q1 / qs;
          bary[t.corner[2]] = q2 / qs;
          const Vec3 p = verts[0] * bary[0] + verts[1] * bary[1] + verts[2] * bary[2];
          const double depth = length(p - frame.eye);
          const std::size_t idx = out.index(x, y);
          if (depth < zbuf[idx] || (depth == zbuf[idx] && t.face < out.face_id[idx])) {
            zbuf[idx] = depth;
            out.face_id[idx] = t.face;
            out.barycentric[idx] = {static_cast<float>(bary[0]), static_cast<float>(bary[1]),
                                    static_cast<float>(bary[2])};
          }
        }
      }
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t f = out.face_id[i];
    if (f == kBackground) continue;
    out.foreground[i] = 1;
    out.depth[i] = static_cast<float>(zbuf[i]);
    out.normal_similarity[i] = static_cast<float>(dot(mesh.face_normals[f], -frame.forward));
  }
  return out;
}

}  // namespace gtex
