#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gtex/image_io.hpp"
#include "gtex/job.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace gtex;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json manifest_of(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

// A small but complete job on the unit quad with the mock predictor.
JobConfig quad_job(const fs::path& dir) {
  write_obj(dir / "quad.obj", make_quad(0.5));
  JobConfig c;
  c.mesh_path = (dir / "quad.obj").string();
  c.prompt = "weathered oak planks";
  c.seed = 7;
  c.backend = "mock";
  c.output_dir = (dir / "out").string();
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  const JobConfig defaults;
  CHECK(parse_config(serialize_config(defaults)) == defaults);
  JobConfig c;
  c.mesh_path = "meshes/a b.obj";
  c.prompt = "a \"quoted\" prompt = with equals # and hash";
  c.seed = 18446744073709551615ull;
  c.steps = 7;
  c.cfg_scale = 3.25;
  c.tau = 0.1 + 1e-12;
  c.strength = 1.0 / 3.0;
  c.style_consistency = false;
  c.sampling_views = {{10.5, 0}, {-20, 359.75}};
  c.backend = "http://localhost:8000";
  c.debug_steps = true;
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("config parsing") {
  const JobConfig c = parse_config("# comment\n\n  steps = 12  \nprompt = red brick\nsampling_views = 0/0 30/90\n");
  CHECK(c.steps == 12);
  CHECK(c.prompt == "red brick");
  CHECK(c.sampling_views == std::vector<ViewAngle>{{0, 0}, {30, 90}});
  CHECK(c.texture_size == 1024);
  JobConfig base;
  base.seed = 99;
  CHECK(parse_config("steps = 3", base).seed == 99);
  CHECK_THROWS_WITH(parse_config("colour = red"), doctest::Contains("colour"));
  CHECK_THROWS(parse_config("steps = twelve"));
  CHECK_THROWS(parse_config("steps 12"));
  CHECK_THROWS(parse_config("sampling_views = 0/0 30"));
  CHECK_THROWS(parse_config("style_consistency = maybe"));
  CHECK_THROWS(load_config("/nonexistent/gtex.cfg"));
}

TEST_CASE("config validation and presets") {
  JobConfig c;
  CHECK(c.sampling_views.size() == 4);
  CHECK(c.inpainting_views.size() == 13);
  CHECK(c.img2img_views.size() == 8);
  c.mesh_path = "x.obj";
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.image_size = 500;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.sampling_views.clear();
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.texture_size = 0;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.latent_factor = 4;
  CHECK_THROWS(bad.validate());
  const auto cams = c.cameras(c.sampling_views);
  CHECK(cams[1].azimuth == 90.0);
  CHECK(cams[1].distance == 2.0);
  CHECK(cams[1].image_size == 512);
}

TEST_CASE("backend resolution") {
  JobConfig c;
  ::unsetenv("GTEX_BACKEND");
  CHECK(c.binding().kind == PredictorBinding::Kind::mock);
  ::setenv("GTEX_BACKEND", "http://env:1", 1);
  CHECK(c.binding().kind == PredictorBinding::Kind::remote);
  CHECK(c.binding().endpoint == "http://env:1");
  c.backend = "mock";
  CHECK(c.binding().kind == PredictorBinding::Kind::mock);
  c.backend = "http://flag:2";
  CHECK(c.binding().endpoint == "http://flag:2");
  ::unsetenv("GTEX_BACKEND");
  c.backend = "mock";
  c.mock_target = "constant";
  CHECK(c.binding().mock_target_spec == "constant");
}

TEST_CASE("end-to-end mock job on a quad") {
  const fs::path dir = oracle::temp_dir("job_quad");
  const JobConfig config = quad_job(dir);
  const JobOutcome outcome = run_job(config);
  REQUIRE(outcome.exit_code == 0);
  CHECK(outcome.status == "ok");
  const fs::path out = config.output_dir;
  CHECK(fs::exists(out / "texture.png"));
  for (int n = 0; n < 4; ++n) CHECK(fs::exists(out / "views" / ("view0" + std::to_string(n) + ".png")));
  CHECK(fs::exists(out / "debug" / "sampled_texture.gtex"));

  const auto m = manifest_of(out);
  CHECK(m["status"] == "ok");
  CHECK(m["failed_stage"].is_null());
  CHECK(m["seed"] == 7);
  CHECK(m["blank_after"] == 0);
  CHECK(m["config"]["prompt"] == config.prompt);
  double covered = 0.0;
  for (const auto& [stage, seconds] : m["timings"].items()) covered += seconds.get<double>();
  CHECK(m["timings"].size() == 7);
  CHECK(covered >= 0.99 * m["total_seconds"].get<double>());

  SUBCASE("canonical renders") {
    const std::vector<std::string> names{"front", "back", "top", "right", "left"};
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(out / "canonical")) files += entry.path().extension() == ".png";
    CHECK(files == 5);
    const Grid texture = read_png(out / "texture.png", GridRole::rgb_texture);
    const Grid front = read_png(out / "canonical" / "front.png");
    const Mesh quad = normalize_mesh(load_mesh(config.mesh_path));
    const auto basis = oracle::camera_basis(0, 0, config.camera_distance, config.fov);
    const int size = front.width();
    std::vector<std::vector<double>> planes(3);
    for (int c = 0; c < 3; ++c) planes[static_cast<std::size_t>(c)].assign(texture.plane(c).begin(), texture.plane(c).end());
    std::size_t background = 0, surface = 0;
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const auto hit = oracle::ray_cast(quad, basis.eye, oracle::pixel_ray(basis, size, x + 0.5, y + 0.5));
        if (hit.face < 0) {
          ++background;
          for (int c = 0; c < 3; ++c) CHECK(front.at(c, y, x) == 1.0f);
          continue;
        }
        ++surface;
        const auto& uv = quad.uv_corners[static_cast<std::size_t>(hit.face)];
        const double b0 = 1.0 - hit.b1 - hit.b2;
        const double u = uv[0].x * b0 + uv[1].x * hit.b1 + uv[2].x * hit.b2;
        const double v = uv[0].y * b0 + uv[1].y * hit.b1 + uv[2].y * hit.b2;
        for (int c = 0; c < 3; ++c) {
          // Texture and render are both 8-bit quantized.
          CHECK(std::abs(front.at(c, y, x) - oracle::texture_lookup(planes[static_cast<std::size_t>(c)], texture.width(), u, v)) <=
                1.01 / 255.0);
        }
      }
    }
    CHECK(background > 0);
    CHECK(surface > 0);
    for (const auto& n : names) CHECK(fs::exists(out / "canonical" / (n + ".png")));
  }
}

TEST_CASE("same config and seed give byte-identical textures") {
  const fs::path dir = oracle::temp_dir("job_repeat");
  JobConfig a = quad_job(dir);
  a.image_size = 256;
  a.texture_size = 256;
  JobConfig b = a;
  b.output_dir = (dir / "again").string();
  REQUIRE(run_job(a).exit_code == 0);
  REQUIRE(run_job(b).exit_code == 0);
  CHECK(slurp(fs::path(a.output_dir) / "texture.png") == slurp(fs::path(b.output_dir) / "texture.png"));
  JobConfig c = a;
  c.seed = 8;
  c.output_dir = (dir / "other").string();
  REQUIRE(run_job(c).exit_code == 0);
  CHECK(slurp(fs::path(a.output_dir) / "texture.png") != slurp(fs::path(c.output_dir) / "texture.png"));
}

TEST_CASE("failures") {
  const fs::path dir = oracle::temp_dir("job_fail");
  SUBCASE("missing mesh leaves no artifacts") {
    JobConfig c = quad_job(dir);
    c.mesh_path = (dir / "missing.obj").string();
    const JobOutcome o = run_job(c);
    CHECK(o.exit_code == 2);
    CHECK_FALSE(fs::exists(c.output_dir));
  }
  SUBCASE("an unreachable backend fails the denoise stage") {
    JobConfig c = quad_job(dir);
    c.backend = "http://127.0.0.1:9";
    c.image_size = 64;
    c.texture_size = 64;
    c.latent_texture_size = 16;
    const JobOutcome o = run_job(c);
    CHECK(o.exit_code == 1);
    CHECK(o.failed_stage == "denoise");
    const auto m = manifest_of(c.output_dir);
    CHECK(m["status"] == "failed");
    CHECK(m["failed_stage"] == "denoise");
    CHECK(m["error"].get<std::string>().size() > 0);
  }
}

TEST_CASE("command-line interface") {
  const char* cli = std::getenv("GTEX_CLI");
  if (!cli) {
    MESSAGE("GTEX_CLI not set; skipping");
    return;
  }
  const fs::path dir = oracle::temp_dir("job_cli");
  write_obj(dir / "quad.obj", make_quad(0.5));
  std::ofstream(dir / "job.cfg") << "image_size = 128\ntexture_size = 128\nlatent_texture_size = 32\nsteps = 4\nprompt = from file\n";
  const std::string base = std::string(cli) + " run --config " + (dir / "job.cfg").string();
  const std::string ok = base + " --mesh " + (dir / "quad.obj").string() + " --mock --seed 3 --prompt 'from flag' --out " +
                         (dir / "out").string() + " 2>/dev/null";
  CHECK(std::system(ok.c_str()) == 0);
  const auto m = manifest_of(dir / "out");
  CHECK(m["config"]["prompt"] == "from flag");
  CHECK(m["config"]["steps"] == 4);
  CHECK(m["seed"] == 3);
  CHECK(m["config"]["backend"] == "mock");

  const std::string missing = base + " --mesh " + (dir / "nope.obj").string() + " --mock --out " + (dir / "out2").string() + " 2>/dev/null";
  const int status = std::system(missing.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  CHECK_FALSE(fs::exists(dir / "out2"));
  const std::string conflict = base + " --mock --backend http://x 2>/dev/null";
  CHECK(WEXITSTATUS(std::system(conflict.c_str())) == 2);
}
