#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtex/grid.hpp"

namespace gtex::wire {

// GTNP: little-endian binary messages shared with the model service.
//
// Request header:
//   "GTNP" | u16 version | u8 msg_type | u32 N | u32 C | u32 H | u32 W | f32 timestep |
//   f32 cfg_scale | u8 style_consistency | u64 seed | u32 prompt_len
//   [u8 extras]                      -- msg_type 4 and 5 only
// followed by the UTF-8 prompt, N*C*H*W f32 latents, N*H*W f32 depths and, when
// extras & kExtraMask, N*H*W f32 masks.
//
// Response: "GTNP" | u8 status | u32 N | u32 C | u32 H | u32 W | N*C*H*W f32 payload.
// A non-zero status carries zero dims followed by u32 length + UTF-8 error text.

inline constexpr char kMagic[4] = {'G', 'T', 'N', 'P'};
inline constexpr std::uint16_t kVersion = 1;

enum class MessageType : std::uint8_t { predict_noise = 1, encode = 2, decode = 3, inpaint = 4, img2img = 5 };

enum class Status : std::uint8_t {
  ok = 0,
  malformed = 1,
  unsupported_version = 2,
  out_of_memory = 3,  // retry with a smaller batch
  internal_error = 4,
};

inline constexpr std::uint8_t kExtraMask = 1u << 0;
inline constexpr std::uint8_t kExtraReferenceLeft = 1u << 1;

bool has_extras(MessageType type);

struct Request {
  MessageType type = MessageType::predict_noise;
  std::uint16_t version = kVersion;
  std::uint32_t n = 0, c = 0, h = 0, w = 0;
  float timestep = 0.0f;
  float cfg_scale = 0.0f;
  bool style_consistency = false;
  std::uint64_t seed = 0;
  std::string prompt;
  std::uint8_t extras = 0;
  std::vector<float> latents;  // N*C*H*W
  std::vector<float> depths;   // N*H*W
  std::vector<float> masks;    // N*H*W when extras & kExtraMask

  friend bool operator==(const Request&, const Request&) = default;
};

struct Response {
  Status status = Status::ok;
  std::uint32_t n = 0, c = 0, h = 0, w = 0;
  std::vector<float> payload;
  std::string error;

  friend bool operator==(const Response&, const Response&) = default;
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(Status status, const std::string& what) : std::runtime_error(what), status_(status) {}
  Status status() const { return status_; }

 private:
  Status status_;
};

std::vector<std::uint8_t> encode_request(const Request& request);
// Throws ProtocolError (malformed / unsupported_version) on bad input.
Request decode_request(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_response(const Response& response);
Response decode_response(std::span<const std::uint8_t> bytes);
Response error_response(Status status, const std::string& message);

// Packs equally shaped grids into an N*C*H*W payload and back.
std::vector<float> pack(const std::vector<Grid>& grids);
std::vector<Grid> unpack(std::span<const float> values, std::uint32_t n, std::uint32_t c, std::uint32_t h,
                         std::uint32_t w, GridRole role);

}  // namespace gtex::wire
