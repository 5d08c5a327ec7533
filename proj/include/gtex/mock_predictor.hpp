#pragma once

#include <string>
#include <vector>

#include "gtex/predictor.hpp"
#include "gtex/schedule.hpp"

namespace gtex {

// Deterministic stand-in for the diffusion service. Its noise estimate is constructed so that
// the implied clean latent is exactly a known target g computed from the view's depth map:
//   eps = (z - sqrt(alpha(t)) * g) / sqrt(1 - alpha(t)).
// With style consistency on, targets are averaged across views wherever all depth maps agree
// within 1e-3. Encode/decode are an 8x8 area pool and a clamped bilinear 8x upsample,
// inpainting is a harmonic fill, and img2img runs DDIM with the same noise estimate.
class MockPredictor final : public NoisePredictor {
 public:
  enum class Target {
    depth_affine,  // g = 0.25 + 0.5 * depth on every latent channel
    constant,      // g = 0.25 + 0.5 * 0.5, i.e. the depth-affine map of a constant 0.5 depth
  };

  MockPredictor(std::vector<double> alpha_bar, int steps, Target target = Target::depth_affine);

  static Target parse_target(const std::string& spec);

  std::vector<Grid> predict_noise(const NoiseRequest& request) override;
  std::vector<Grid> encode(const std::vector<Grid>& images) override;
  std::vector<Grid> decode(const std::vector<Grid>& latents, bool style_consistency) override;
  Grid inpaint(const InpaintRequest& request) override;
  std::vector<Grid> img2img(const NoiseRequest& request) override;

  // Per-view targets g for the given depth maps (C = kLatentChannels).
  std::vector<Grid> targets(const std::vector<Grid>& depth_maps, bool style_consistency) const;

  int calls() const { return calls_; }

 private:
  double alpha_at(int timestep) const;

  std::vector<double> alpha_bar_;
  Schedule schedule_;
  Target target_;
  int calls_ = 0;
};

}  // namespace gtex
