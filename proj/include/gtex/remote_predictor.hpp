#pragma once

#include <string>
#include <vector>

#include "gtex/predictor.hpp"
#include "gtex/wire.hpp"

namespace gtex {

// Client for the model service: each call is one GTNP request POSTed to {endpoint}/gtnp.
// Transport failures, timeouts and error statuses raise a retriable PredictorError.
class RemotePredictor final : public NoisePredictor {
 public:
  explicit RemotePredictor(std::string endpoint, double timeout_seconds = 600.0);

  // Endpoint from the GTEX_BACKEND environment variable, or empty.
  static std::string endpoint_from_env();

  std::vector<Grid> predict_noise(const NoiseRequest& request) override;
  std::vector<Grid> encode(const std::vector<Grid>& images) override;
  std::vector<Grid> decode(const std::vector<Grid>& latents, bool style_consistency) override;
  Grid inpaint(const InpaintRequest& request) override;
  std::vector<Grid> img2img(const NoiseRequest& request) override;

 private:
  wire::Response exchange(const wire::Request& request);
  wire::Request noise_message(wire::MessageType type, const NoiseRequest& request) const;

  std::string endpoint_;
  double timeout_seconds_;
};

}  // namespace gtex
