#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <random>
#include <thread>

#include "gtex/mock_predictor.hpp"
#include "gtex/remote_predictor.hpp"
#include "gtex/sampler.hpp"
#include "gtex/wire.hpp"
#include "httplib.h"
#include "oracles.hpp"

using namespace gtex;

namespace {

Grid random_grid(int c, int h, int w, GridRole role, unsigned seed, float lo = -1.0f, float hi = 1.0f) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  Grid g(c, h, w, role);
  for (float& v : g.values()) v = dist(gen);
  return g;
}

NoiseRequest noise_request(int views, int size, unsigned seed) {
  NoiseRequest r;
  for (int n = 0; n < views; ++n) {
    r.latent_images.push_back(random_grid(4, size, size, GridRole::latent_image, seed + n));
    r.depth_maps.push_back(random_grid(1, size, size, GridRole::mask, seed + 100 + n, 0.0f, 1.0f));
  }
  r.prompt = "a rusty robot";
  r.timestep = 999;
  r.seed = 42;
  return r;
}

double psnr(const Grid& a, const Grid& b) {
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    mse += d * d;
  }
  return oracle::psnr(mse / static_cast<double>(a.size()));
}

// HTTP test double that answers every GTNP request with its own latent payload.
class EchoServer {
 public:
  EchoServer() {
    server_.Post("/gtnp", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      const auto* bytes = reinterpret_cast<const std::uint8_t*>(req.body.data());
      wire::Response out;
      try {
        const wire::Request in = wire::decode_request({bytes, req.body.size()});
        last = in;
        out.n = in.n;
        out.c = in.c;
        out.h = in.h;
        out.w = in.w;
        out.payload = in.latents;
      } catch (const wire::ProtocolError& e) {
        out = wire::error_response(e.status(), e.what());
      }
      if (fail_next) {
        fail_next = false;
        out = wire::error_response(wire::Status::out_of_memory, "batch too large");
      }
      const auto body = wire::encode_response(out);
      res.set_content(std::string(body.begin(), body.end()), "application/octet-stream");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~EchoServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> requests{0};
  wire::Request last;
  bool fail_next = false;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("mock noise estimate implies the target exactly") {
  const auto ab = scaled_linear_alpha_bar();
  const Schedule schedule = build_schedule(20, ab);
  MockPredictor mock(ab, 20);
  NoiseRequest r = noise_request(3, 8, 1);
  const auto g = mock.targets(r.depth_maps, false);
  for (int i : {1, 7, 20}) {
    const double a = schedule.alpha(i);
    r.timestep = schedule.timestep(i);
    const Grid eps = random_grid(4, 8, 8, GridRole::latent_image, 50 + i);
    for (int n = 0; n < 3; ++n) {
      for (std::size_t k = 0; k < eps.size(); ++k) {
        r.latent_images[n].values()[k] = static_cast<float>(std::sqrt(a) * g[n].values()[k] + std::sqrt(1 - a) * eps.values()[k]);
      }
    }
    const auto e = mock.predict_noise(r);
    for (int n = 0; n < 3; ++n) {
      const Grid z0 = predict_z0(r.latent_images[n], e[n], a);
      CHECK(max_abs_diff(z0, g[n]) <= 1e-5f);
      CHECK(max_abs_diff(e[n], eps) <= 1e-4f);
    }
  }
  r.timestep = 1234;
  CHECK_THROWS_AS(mock.predict_noise(r), PredictorError);
}

TEST_CASE("mock targets") {
  MockPredictor mock(scaled_linear_alpha_bar(), 10);
  Grid d1(1, 2, 2, GridRole::mask), d2(1, 2, 2, GridRole::mask);
  d1.values() = {0.0f, 0.2f, 0.4f, 1.0f};
  d2.values() = {0.0f, 0.6f, 0.4f, 0.9995f};
  const auto plain = mock.targets({d1, d2}, false);
  for (int c = 0; c < 4; ++c) CHECK(plain[0].at(c, 0, 1) == doctest::Approx(0.25 + 0.5 * 0.2));
  const auto styled = mock.targets({d1, d2}, true);
  CHECK(styled[0].at(2, 0, 1) == doctest::Approx(0.35));
  CHECK(styled[1].at(2, 0, 1) == doctest::Approx(0.55));
  CHECK(styled[0].at(0, 1, 1) == doctest::Approx(styled[1].at(0, 1, 1)));
  CHECK(styled[0].at(0, 1, 1) == doctest::Approx(0.25 + 0.5 * (1.0 + 0.9995) / 2).epsilon(1e-6));
  MockPredictor constant(scaled_linear_alpha_bar(), 10, MockPredictor::Target::constant);
  const auto flat_targets = constant.targets({d1}, false);
  for (float v : flat_targets[0].values()) CHECK(v == 0.5f);
  CHECK(MockPredictor::parse_target("constant") == MockPredictor::Target::constant);
  CHECK(MockPredictor::parse_target("depth-affine") == MockPredictor::Target::depth_affine);
  CHECK_THROWS_AS(MockPredictor::parse_target("sine"), std::invalid_argument);
}

TEST_CASE("constant target samples a constant texture") {
  const auto ab = scaled_linear_alpha_bar();
  const Mesh sphere = normalize_mesh(make_icosphere(3, 1.0));
  SamplerSettings settings;
  settings.image_size = 256;
  settings.latent_texture_size = 64;
  settings.prompt = "x";
  std::vector<Camera> cams;
  for (double az : {0.0, 90.0, 180.0, 270.0}) {
    Camera c;
    c.azimuth = az;
    c.image_size = 256;
    cams.push_back(c);
  }
  const int steps = 8;
  MockPredictor mock(ab, steps, MockPredictor::Target::constant);
  Rng rng(3);
  auto states = init_states(sphere, cams, settings, rng);
  denoise(states, sphere, build_schedule(steps, ab), AlignmentSchedule::raised_cosine(steps, 0.1, 0.9), mock, settings, rng);
  const MergeResult merged = decode_and_merge(states, mock, sphere, 256, settings);
  std::size_t covered = 0;
  for (std::size_t k = 0; k < merged.charted.size(); ++k) {
    if (!merged.charted[k] || merged.blank[k]) continue;
    ++covered;
    for (int c = 0; c < 3; ++c) CHECK(std::abs(merged.texture.plane(c)[k] - 0.5f) <= 1e-3f);
  }
  CHECK(covered > 1000);
}

TEST_CASE("mock autoencoder") {
  MockPredictor mock(scaled_linear_alpha_bar(), 10);
  const Grid flat(3, 64, 64, GridRole::rgb_image, 0.3f);
  const Grid z = mock.encode({flat}).front();
  CHECK(z.channels() == 4);
  CHECK(z.width() == 8);
  CHECK(z.at(3, 2, 2) == 0.0f);
  CHECK(mock.decode({z}, true).front() == flat);

  Grid ramp(3, 512, 512, GridRole::rgb_image);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 512; ++y) {
      for (int x = 0; x < 512; ++x) ramp.at(c, y, x) = static_cast<float>(0.1 + 0.8 * (x + 0.5 * y + 0.3 * c * x) / (1.0 + 0.5 + 0.6) / 512.0);
    }
  }
  const Grid back = mock.decode(mock.encode({ramp}), false).front();
  CHECK(psnr(back, ramp) >= 35.0);

  const Grid noisy = random_grid(3, 64, 64, GridRole::rgb_image, 9, 0.0f, 1.0f);
  Grid wild = mock.encode({noisy}).front();
  for (float& v : wild.values()) v = v * 4.0f - 1.5f;
  const Grid clamped = mock.decode({wild}, false).front();
  for (float v : clamped.values()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  CHECK_THROWS_AS(mock.encode({Grid(3, 60, 64, GridRole::rgb_image)}), std::invalid_argument);
  CHECK_THROWS_AS(mock.decode({Grid(3, 8, 8, GridRole::latent_image)}, false), std::invalid_argument);
}

TEST_CASE("mock img2img converges to the target") {
  const auto ab = scaled_linear_alpha_bar();
  const Schedule schedule = build_schedule(10, ab);
  MockPredictor mock(ab, 10);
  NoiseRequest r = noise_request(2, 8, 4);
  r.timestep = schedule.timestep(4);
  const auto out = mock.img2img(r);
  const auto g = mock.targets(r.depth_maps, true);
  for (int n = 0; n < 2; ++n) CHECK(max_abs_diff(out[n], g[n]) <= 1e-4f);
  CHECK(mock.calls() == 1);
  r.timestep = 5;
  CHECK_THROWS_AS(mock.img2img(r), PredictorError);
}

TEST_CASE("mock inpainting fills the masked target half only") {
  MockPredictor mock(scaled_linear_alpha_bar(), 10);
  InpaintRequest r;
  r.canvas = Grid(3, 8, 16, GridRole::rgb_image, 0.2f);
  r.mask = Grid(1, 8, 16, GridRole::mask);
  r.depth = Grid(1, 8, 16, GridRole::mask, 0.5f);
  for (int y = 0; y < 8; ++y) {
    r.canvas.at(0, y, 15) = 0.8f;
    for (int x = 10; x < 15; ++x) {
      r.mask.at(0, y, x) = 1.0f;
      r.canvas.at(0, y, x) = 0.0f;
    }
  }
  const Grid out = mock.inpaint(r);
  CHECK(out.at(0, 3, 2) == 0.2f);
  CHECK(out.at(0, 3, 15) == 0.8f);
  for (int x = 10; x < 15; ++x) {
    CHECK(out.at(0, 3, x) > 0.2f);
    CHECK(out.at(0, 3, x) < 0.8f);
  }
  CHECK(std::abs(out.at(0, 3, 12) - 0.5f) <= 1e-3f);
  CHECK(mock.calls() == 1);
}

TEST_CASE("request validation") {
  NoiseRequest r = noise_request(2, 8, 1);
  CHECK_NOTHROW(r.validate());
  NoiseRequest bad = r;
  bad.cfg_scale = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = r;
  bad.depth_maps.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = r;
  bad.latent_images[1] = Grid(4, 4, 4, GridRole::latent_image);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = r;
  bad.latent_images[0].values()[3] = NAN;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = r;
  bad.latent_images.clear();
  bad.depth_maps.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  PredictorBinding b;
  CHECK_NOTHROW(b.validate());
  b.kind = PredictorBinding::Kind::remote;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b.endpoint = "http://localhost:1";
  CHECK_NOTHROW(b.validate());
  PredictorBinding m;
  m.endpoint = "http://x";
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.endpoint.clear();
  m.mock_target_spec = "bogus";
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("wire request round trip and layout") {
  wire::Request r;
  r.type = wire::MessageType::inpaint;
  r.n = 1;
  r.c = 3;
  r.h = 2;
  r.w = 4;
  r.timestep = 981.0f;
  r.cfg_scale = 7.5f;
  r.style_consistency = true;
  r.seed = 0x0102030405060708ull;
  r.prompt = "caf\xc3\xa9";
  r.extras = wire::kExtraMask | wire::kExtraReferenceLeft;
  for (int i = 0; i < 24; ++i) r.latents.push_back(static_cast<float>(i) * 0.5f);
  r.depths.assign(8, 0.25f);
  r.masks.assign(8, 1.0f);
  const auto bytes = wire::encode_request(r);
  // Header: 4 + 2 + 1 + 16 + 4 + 4 + 1 + 8 + 4 = 44 bytes, then extras, prompt, payloads.
  CHECK(bytes.size() == 44u + 1u + 5u + 4u * (24 + 8 + 8));
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "GTNP");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 4);
  CHECK(bytes[32] == 0x08);  // seed, little-endian
  CHECK(bytes[39] == 0x01);
  CHECK(wire::decode_request(bytes) == r);

  wire::Request noise;
  noise.n = 2;
  noise.c = 4;
  noise.h = 1;
  noise.w = 1;
  noise.latents.assign(8, -1.5f);
  noise.depths = {0.0f, 1.0f};
  const auto nb = wire::encode_request(noise);
  CHECK(nb.size() == 44u + 4u * 10u);
  CHECK(wire::decode_request(nb) == noise);
}

TEST_CASE("wire rejects bad requests") {
  wire::Request r;
  r.n = r.c = r.h = r.w = 1;
  r.latents = {1.0f};
  r.depths = {0.5f};
  auto bytes = wire::encode_request(r);

  auto status_of = [](const std::vector<std::uint8_t>& b) {
    try {
      wire::decode_request(b);
    } catch (const wire::ProtocolError& e) {
      return e.status();
    }
    return wire::Status::ok;
  };
  auto v2 = bytes;
  v2[4] = 2;
  CHECK(status_of(v2) == wire::Status::unsupported_version);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(status_of(magic) == wire::Status::malformed);
  auto type = bytes;
  type[6] = 9;
  CHECK(status_of(type) == wire::Status::malformed);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK(status_of(trailing) == wire::Status::malformed);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK(status_of(truncated) == wire::Status::malformed);
  CHECK(status_of({}) == wire::Status::malformed);
  CHECK_THROWS_AS(wire::encode_request(wire::Request{.n = 1, .c = 1, .h = 1, .w = 1}), std::invalid_argument);
}

TEST_CASE("wire responses") {
  wire::Response ok;
  ok.n = 1;
  ok.c = 2;
  ok.h = 1;
  ok.w = 2;
  ok.payload = {1, 2, 3, 4};
  CHECK(wire::decode_response(wire::encode_response(ok)) == ok);
  const wire::Response err = wire::error_response(wire::Status::out_of_memory, "too big");
  const auto back = wire::decode_response(wire::encode_response(err));
  CHECK(back.status == wire::Status::out_of_memory);
  CHECK(back.error == "too big");
  CHECK(back.payload.empty());
  auto bytes = wire::encode_response(ok);
  bytes.push_back(1);
  CHECK_THROWS_AS(wire::decode_response(bytes), wire::ProtocolError);

  const std::vector<Grid> grids{random_grid(2, 3, 4, GridRole::latent_image, 1), random_grid(2, 3, 4, GridRole::latent_image, 2)};
  const auto packed = wire::pack(grids);
  CHECK(packed.size() == 48u);
  CHECK(wire::unpack(packed, 2, 2, 3, 4, GridRole::latent_image) == grids);
  CHECK_THROWS_AS(wire::unpack(packed, 3, 2, 3, 4, GridRole::latent_image), std::invalid_argument);
}

TEST_CASE("remote predictor round trips through an echo server") {
  EchoServer server;
  RemotePredictor remote(server.endpoint() + "/", 10.0);
  const NoiseRequest r = noise_request(3, 8, 7);
  const auto back = remote.predict_noise(r);
  REQUIRE(back.size() == 3);
  for (int n = 0; n < 3; ++n) CHECK(back[n] == r.latent_images[n]);
  CHECK(server.last.type == wire::MessageType::predict_noise);
  CHECK(server.last.prompt == r.prompt);
  CHECK(server.last.seed == 42u);
  CHECK(server.last.timestep == 999.0f);
  CHECK(server.last.style_consistency);
  CHECK(server.last.depths == wire::pack(r.depth_maps));

  CHECK(remote.img2img(r)[2] == r.latent_images[2]);
  CHECK(server.last.type == wire::MessageType::img2img);

  const Grid img = random_grid(3, 16, 16, GridRole::rgb_image, 3, 0.0f, 1.0f);
  CHECK(remote.decode({img}, true).front() == img);
  CHECK(server.last.type == wire::MessageType::decode);
  CHECK(remote.encode({img}).front().values() == img.values());

  InpaintRequest ip;
  ip.canvas = random_grid(3, 4, 8, GridRole::rgb_image, 5, 0.0f, 1.0f);
  ip.mask = random_grid(1, 4, 8, GridRole::mask, 6, 0.0f, 1.0f);
  ip.depth = random_grid(1, 4, 8, GridRole::mask, 7, 0.0f, 1.0f);
  CHECK(remote.inpaint(ip) == ip.canvas);
  CHECK(server.last.extras == (wire::kExtraMask | wire::kExtraReferenceLeft));
  CHECK(server.last.masks == ip.mask.values());
  CHECK(server.requests.load() == 5);

  server.fail_next = true;
  try {
    remote.predict_noise(r);
    FAIL("expected an error");
  } catch (const PredictorError& e) {
    CHECK(e.retriable());
    CHECK(std::string(e.what()).find("batch too large") != std::string::npos);
  }
}

TEST_CASE("remote predictor reports an unreachable backend as retriable") {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemotePredictor remote("http://127.0.0.1:" + std::to_string(port), 2.0);
  try {
    remote.predict_noise(noise_request(1, 4, 1));
    FAIL("expected an error");
  } catch (const PredictorError& e) {
    CHECK(e.retriable());
  }
  CHECK_THROWS_AS(RemotePredictor(""), std::invalid_argument);
}

TEST_CASE("make_predictor binds the requested implementation") {
  const auto ab = scaled_linear_alpha_bar();
  PredictorBinding b;
  CHECK(dynamic_cast<MockPredictor*>(make_predictor(b, ab, 10).get()) != nullptr);
  b.kind = PredictorBinding::Kind::remote;
  b.endpoint = "http://127.0.0.1:9";
  CHECK(dynamic_cast<RemotePredictor*>(make_predictor(b, ab, 10).get()) != nullptr);
}
