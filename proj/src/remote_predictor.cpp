#include "gtex/remote_predictor.hpp"

#include <cstdlib>

#include "httplib.h"

namespace gtex {
RemotePredictor::RemotePredictor(std::string endpoint, double timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {
  if (endpoint_.empty()) throw std::invalid_argument("remote predictor needs an endpoint");
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

std::string RemotePredictor::endpoint_from_env() {
  const char* value = std::getenv("GTEX_BACKEND");
  return value ? std::string(value) : std::string();
}

wire::Response RemotePredictor::exchange(const wire::Request& request) {
  const auto body = wire::encode_request(request);
  httplib::Client client(endpoint_);
  const auto seconds = static_cast<time_t>(timeout_seconds_);
  client.set_connection_timeout(seconds);
  client.set_read_timeout(seconds);
  client.set_write_timeout(seconds);
  auto result = client.Post("/gtnp", reinterpret_cast<const char*>(body.data()), body.size(),
                            "application/octet-stream");
  if (!result) {
    throw PredictorError("backend request failed: " + httplib::to_string(result.error()), true);
  }
  if (result->status != 200) {
    throw PredictorError("backend returned HTTP " + std::to_string(result->status), true);
  }
  wire::Response response;
  try {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(result->body.data());
    response = wire::decode_response({bytes, result->body.size()});
  } catch (const wire::ProtocolError& e) {
    throw PredictorError(std::string("malformed backend response: ") + e.what(), true);
  }
  if (response.status != wire::Status::ok) {
    throw PredictorError("backend error (status " + std::to_string(static_cast<int>(response.status)) +
                             "): " + response.error,
                         true);
  }
  return response;
}

wire::Request RemotePredictor::noise_message(wire::MessageType type, const NoiseRequest& request) const {
  request.validate();
  const Grid& z = request.latent_images.front();
  wire::Request m;
  m.type = type;
  m.n = static_cast<std::uint32_t>(request.latent_images.size());
  m.c = static_cast<std::uint32_t>(z.channels());
  m.h = static_cast<std::uint32_t>(z.height());
  m.w = static_cast<std::uint32_t>(z.width());
  m.timestep = static_cast<float>(request.timestep);
  m.cfg_scale = static_cast<float>(request.cfg_scale);
  m.style_consistency = request.style_consistency;
  m.seed = request.seed;
  m.prompt = request.prompt;
  m.latents = wire::pack(request.latent_images);
  m.depths = wire::pack(request.depth_maps);
  return m;
}

std::vector<Grid> RemotePredictor::predict_noise(const NoiseRequest& request) {
  const auto m = noise_message(wire::MessageType::predict_noise, request);
  const auto r = exchange(m);
  if (r.n != m.n || r.c != m.c || r.h != m.h || r.w != m.w) throw PredictorError("backend returned wrong noise shape", true);
  return wire::unpack(r.payload, r.n, r.c, r.h, r.w, GridRole::latent_image);
}

std::vector<Grid> RemotePredictor::img2img(const NoiseRequest& request) {
  const auto m = noise_message(wire::MessageType::img2img, request);
  const auto r = exchange(m);
  if (r.n != m.n || r.c != m.c || r.h != m.h || r.w != m.w) throw PredictorError("backend returned wrong latent shape", true);
  return wire::unpack(r.payload, r.n, r.c, r.h, r.w, GridRole::latent_image);
}

std::vector<Grid> RemotePredictor::encode(const std::vector<Grid>& images) {
  if (images.empty()) return {};
  const Grid& x = images.front();
  wire::Request m;
  m.type = wire::MessageType::encode;
  m.n = static_cast<std::uint32_t>(images.size());
  m.c = static_cast<std::uint32_t>(x.channels());
  m.h = static_cast<std::uint32_t>(x.height());
  m.w = static_cast<std::uint32_t>(x.width());
  m.cfg_scale = 1.0f;
  m.latents = wire::pack(images);
  m.depths.assign(static_cast<std::size_t>(m.n) * m.h * m.w, 0.0f);
  const auto r = exchange(m);
  return wire::unpack(r.payload, r.n, r.c, r.h, r.w, GridRole::latent_image);
}

std::vector<Grid> RemotePredictor::decode(const std::vector<Grid>& latents, bool style_consistency) {
  if (latents.empty()) return {};
  const Grid& z = latents.front();
  wire::Request m;
  m.type = wire::MessageType::decode;
  m.n = static_cast<std::uint32_t>(latents.size());
  m.c = static_cast<std::uint32_t>(z.channels());
  m.h = static_cast<std::uint32_t>(z.height());
  m.w = static_cast<std::uint32_t>(z.width());
  m.cfg_scale = 1.0f;
  m.style_consistency = style_consistency;
  m.latents = wire::pack(latents);
  m.depths.assign(static_cast<std::size_t>(m.n) * m.h * m.w, 0.0f);
  const auto r = exchange(m);
  return wire::unpack(r.payload, r.n, r.c, r.h, r.w, GridRole::rgb_image);
}

Grid RemotePredictor::inpaint(const InpaintRequest& request) {
  request.validate();
  wire::Request m;
  m.type = wire::MessageType::inpaint;
  m.n = 1;
  m.c = static_cast<std::uint32_t>(request.canvas.channels());
  m.h = static_cast<std::uint32_t>(request.canvas.height());
  m.w = static_cast<std::uint32_t>(request.canvas.width());
  m.cfg_scale = static_cast<float>(request.cfg_scale);
  m.seed = request.seed;
  m.prompt = request.prompt;
  m.extras = wire::kExtraMask | (request.reference_left ? wire::kExtraReferenceLeft : 0);
  m.latents = request.canvas.values();
  m.depths = request.depth.values();
  m.masks = request.mask.values();
  const auto r = exchange(m);
  if (r.n != 1 || r.c != m.c || r.h != m.h || r.w != m.w) throw PredictorError("backend returned wrong canvas shape", true);
  return wire::unpack(r.payload, 1, r.c, r.h, r.w, GridRole::rgb_image).front();
}

}  // namespace gtex
