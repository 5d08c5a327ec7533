#include "gtex/wire.hpp"

#include <cstring>

#include "gtex/bytes.hpp"

namespace gtex::wire {

bool has_extras(MessageType type) { return type == MessageType::inpaint || type == MessageType::img2img; }

namespace {

bool valid_type(std::uint8_t t) { return t >= 1 && t <= 5; }

std::size_t checked_count(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d = 1) {
  const std::uint64_t n = a * b * c * d;
  // 1 GiB of floats is far beyond any legitimate message.
  if (n > (1ull << 28)) throw ProtocolError(Status::malformed, "payload dimensions too large");
  return static_cast<std::size_t>(n);
}

}  // namespace

std::vector<std::uint8_t> encode_request(const Request& r) {
  if (r.latents.size() != static_cast<std::size_t>(r.n) * r.c * r.h * r.w) {
    throw std::invalid_argument("latent payload does not match header dims");
  }
  if (r.depths.size() != static_cast<std::size_t>(r.n) * r.h * r.w) {
    throw std::invalid_argument("depth payload does not match header dims");
  }
  const bool masks = has_extras(r.type) && (r.extras & kExtraMask);
  if (masks && r.masks.size() != static_cast<std::size_t>(r.n) * r.h * r.w) {
    throw std::invalid_argument("mask payload does not match header dims");
  }
  ByteWriter w;
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.put(r.version);
  w.put(static_cast<std::uint8_t>(r.type));
  w.put(r.n);
  w.put(r.c);
  w.put(r.h);
  w.put(r.w);
  w.put(r.timestep);
  w.put(r.cfg_scale);
  w.put(static_cast<std::uint8_t>(r.style_consistency ? 1 : 0));
  w.put(r.seed);
  w.put(static_cast<std::uint32_t>(r.prompt.size()));
  if (has_extras(r.type)) w.put(r.extras);
  w.put_string(r.prompt);
  w.put_floats(r.latents);
  w.put_floats(r.depths);
  if (masks) w.put_floats(r.masks);
  return w.take();
}

Request decode_request(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader in(bytes);
    if (in.get_string(4) != std::string(kMagic, 4)) throw ProtocolError(Status::malformed, "bad magic");
    Request r;
    r.version = in.get<std::uint16_t>();
    if (r.version != kVersion) {
      throw ProtocolError(Status::unsupported_version, "unsupported protocol version " + std::to_string(r.version));
    }
    const auto type = in.get<std::uint8_t>();
    if (!valid_type(type)) throw ProtocolError(Status::malformed, "unknown message type " + std::to_string(type));
    r.type = static_cast<MessageType>(type);
    r.n = in.get<std::uint32_t>();
    r.c = in.get<std::uint32_t>();
    r.h = in.get<std::uint32_t>();
    r.w = in.get<std::uint32_t>();
    r.timestep = in.get<float>();
    r.cfg_scale = in.get<float>();
    r.style_consistency = in.get<std::uint8_t>() != 0;
    r.seed = in.get<std::uint64_t>();
    const auto prompt_len = in.get<std::uint32_t>();
    if (has_extras(r.type)) r.extras = in.get<std::uint8_t>();
    r.prompt = in.get_string(prompt_len);
    r.latents.resize(checked_count(r.n, r.c, r.h, r.w));
    in.get_floats(r.latents);
    r.depths.resize(checked_count(r.n, r.h, r.w));
    in.get_floats(r.depths);
    if (has_extras(r.type) && (r.extras & kExtraMask)) {
      r.masks.resize(checked_count(r.n, r.h, r.w));
      in.get_floats(r.masks);
    }
    if (in.remaining() != 0) throw ProtocolError(Status::malformed, "trailing bytes after request");
    return r;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(Status::malformed, e.what());
  }
}

std::vector<std::uint8_t> encode_response(const Response& r) {
  ByteWriter w;
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.put(static_cast<std::uint8_t>(r.status));
  if (r.status != Status::ok) {
    for (int i = 0; i < 4; ++i) w.put(std::uint32_t{0});
    w.put(static_cast<std::uint32_t>(r.error.size()));
    w.put_string(r.error);
    return w.take();
  }
  if (r.payload.size() != static_cast<std::size_t>(r.n) * r.c * r.h * r.w) {
    throw std::invalid_argument("response payload does not match dims");
  }
  w.put(r.n);
  w.put(r.c);
  w.put(r.h);
  w.put(r.w);
  w.put_floats(r.payload);
  return w.take();
}

Response decode_response(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader in(bytes);
    if (in.get_string(4) != std::string(kMagic, 4)) throw ProtocolError(Status::malformed, "bad response magic");
    Response r;
    r.status = static_cast<Status>(in.get<std::uint8_t>());
    r.n = in.get<std::uint32_t>();
    r.c = in.get<std::uint32_t>();
    r.h = in.get<std::uint32_t>();
    r.w = in.get<std::uint32_t>();
    if (r.status != Status::ok) {
      r.error = in.get_string(in.get<std::uint32_t>());
      return r;
    }
    r.payload.resize(checked_count(r.n, r.c, r.h, r.w));
    in.get_floats(r.payload);
    if (in.remaining() != 0) throw ProtocolError(Status::malformed, "trailing bytes after response");
    return r;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProtocolError(Status::malformed, e.what());
  }
}

Response error_response(Status status, const std::string& message) {
  Response r;
  r.status = status;
  r.error = message;
  return r;
}

std::vector<float> pack(const std::vector<Grid>& grids) {
  std::vector<float> out;
  if (grids.empty()) return out;
  out.reserve(grids.size() * grids.front().size());
  for (const Grid& g : grids) {
    if (!g.same_shape(grids.front())) throw std::invalid_argument("cannot pack grids of different shapes");
    out.insert(out.end(), g.values().begin(), g.values().end());
  }
  return out;
}

std::vector<Grid> unpack(std::span<const float> values, std::uint32_t n, std::uint32_t c, std::uint32_t h,
                         std::uint32_t w, GridRole role) {
  const std::size_t per = static_cast<std::size_t>(c) * h * w;
  if (values.size() != per * n) throw std::invalid_argument("payload size does not match dims");
  std::vector<Grid> grids;
  grids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Grid g(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w), role);
    std::memcpy(g.values().data(), values.data() + i * per, per * sizeof(float));
    grids.push_back(std::move(g));
  }
  return grids;
}

}  // namespace gtex::wire
