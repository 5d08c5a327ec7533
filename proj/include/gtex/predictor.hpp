#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gtex/grid.hpp"

namespace gtex {

// Latent layout of the wrapped autoencoder family.
inline constexpr int kLatentChannels = 4;
inline constexpr int kLatentFactor = 8;

class PredictorError : public std::runtime_error {
 public:
  PredictorError(const std::string& what, bool retriable) : std::runtime_error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

// Arguments of the conditional denoiser eps(z, t, text, depth) for a batch of N views.
struct NoiseRequest {
  std::vector<Grid> latent_images;
  int timestep = 0;
  std::string prompt;
  std::vector<Grid> depth_maps;  // normalized inverse depth in [0,1], same H x W as the latents
  double cfg_scale = 7.5;
  bool style_consistency = true;
  std::uint64_t seed = 0;

  void validate() const;
};

// Reference-conditioned inpainting on a double-width canvas: reference view on the left, target
// on the right. The mask is zero over the reference half.
struct InpaintRequest {
  Grid canvas;  // rgb_image, H x 2W
  Grid mask;    // mask, H x 2W, blurred blank mask in [0,1]
  Grid depth;   // mask-like, H x 2W
  std::string prompt;
  double cfg_scale = 7.5;
  std::uint64_t seed = 0;
  bool reference_left = true;

  void validate() const;
};

class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;

  // One noise estimate per view, each shaped like its latent.
  virtual std::vector<Grid> predict_noise(const NoiseRequest& request) = 0;
  virtual std::vector<Grid> encode(const std::vector<Grid>& images) = 0;
  virtual std::vector<Grid> decode(const std::vector<Grid>& latents, bool style_consistency) = 0;
  // Returns the inpainted canvas (same shape as request.canvas).
  virtual Grid inpaint(const InpaintRequest& request) = 0;
  // Denoises latents that were forward-noised to request.timestep down to t = 0.
  virtual std::vector<Grid> img2img(const NoiseRequest& request) = 0;
};

struct PredictorBinding {
  enum class Kind { mock, remote };
  Kind kind = Kind::mock;
  std::string endpoint;                        // remote only
  std::string mock_target_spec = "depth-affine";  // mock only

  void validate() const;
};

// Builds the bound implementation; the mock needs the model's alpha-bar table and step count.
std::unique_ptr<NoisePredictor> make_predictor(const PredictorBinding& binding, const std::vector<double>& alpha_bar,
                                               int steps);

}  // namespace gtex
