#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gtex/geometry.hpp"
#include "gtex/grid.hpp"
#include "gtex/predictor.hpp"
#include "gtex/renderer.hpp"
#include "gtex/rng.hpp"
#include "gtex/schedule.hpp"

namespace gtex {

struct SamplerSettings {
  int image_size = 512;
  int latent_texture_size = 128;
  double tau = 0.1;
  double cfg_scale = 7.5;
  bool style_consistency = true;
  std::string prompt;
  std::uint64_t seed = 0;  // forwarded to the predictor with every request

  int latent_size() const { return image_size / kLatentFactor; }
  void validate() const;
};

struct ViewState {
  Camera camera;
  ViewBuffers buffers;         // image_size, used for visibility and masks
  ViewBuffers latent_buffers;  // latent resolution, used to render latent textures
  TexelFootprint footprint;    // latent texture resolution
  Grid depth_map;              // normalized inverse depth at latent resolution
  Grid foreground_mask;        // M_n
  Grid similarity;             // N_n at latent resolution
  Grid background;             // z_bg
  Grid cached_noise;           // eps_hat of the most recent step
  Grid latent_texture;
  Grid texture_weight;         // {0,1} visibility of each latent texel
  Grid texture_similarity;     // clamped similarity of visible latent texels, 0 elsewhere
  Grid z0_hat;                 // most recent clean-latent estimate
};

// Per-view inverse depth divided by its maximum (background 0), area-pooled by `factor`.
Grid normalized_inverse_depth(const ViewBuffers& buffers, int factor);

// Rasterizes every view and draws, per view in order, z_bg and the initial cached noise.
std::vector<ViewState> init_states(const Mesh& mesh, const std::vector<Camera>& cameras, const SamplerSettings& settings,
                                   Rng& rng);

// M * (sqrt(a_i) R(z_tex) + sqrt(1 - a_i - s_{i+1}^2) eps_hat) + (1 - M) z_bg + s_{i+1} eps with a
// fresh eps drawn from `rng` (drawn even when s_{i+1} = 0).
Grid compose_latent_image(const ViewState& state, const Mesh& mesh, const Schedule& schedule, int i, Rng& rng);

Grid predict_z0(const Grid& z_img, const Grid& eps_hat, double alpha);

// Writes R^-1(z0_hat) into visible latent texels (and seam padding into uncharted ones), moves
// z_bg to step i-1 and caches eps_hat.
void update_after_prediction(ViewState& state, const Grid& z0_hat, const Grid& eps_hat, const Schedule& schedule, int i);

// Softmax over views of similarity / tau, per texel, over the views whose weight is non-zero.
// Returns one weight grid per view; every texel with at least one covering view sums to 1.
std::vector<Grid> compute_view_weights(const std::vector<Grid>& similarities, const std::vector<Grid>& weights,
                                       double tau);

// Blends each view's latent texture towards the softmax-weighted consensus by c on its covered
// texels. c = 0 leaves everything untouched.
void dynamic_align(std::vector<ViewState>& states, double c, double tau);

struct StepRecord {
  int step = 0;
  const std::vector<Grid>& latent_images;
  const std::vector<ViewState>& states;
};
using StepObserver = std::function<void(const StepRecord&)>;

// Runs steps i = T..1 with one batched predictor call per step.
void denoise(std::vector<ViewState>& states, const Mesh& mesh, const Schedule& schedule,
             const AlignmentSchedule& alignment, NoisePredictor& predictor, const SamplerSettings& settings, Rng& rng,
             const StepObserver& observer = {});

struct MergeResult {
  Grid texture;                        // rgb_texture
  std::vector<std::uint8_t> charted;   // texel lies on a UV chart
  std::vector<std::uint8_t> blank;     // charted but covered by no view
  std::vector<Grid> view_weights;      // softmax weights per view
  std::vector<Grid> view_images;       // decoded RGB image per view

  std::size_t blank_count() const;
};

// Decodes the final clean latents, inverse-renders them at `texture_size` and merges them with
// per-texel softmax weights.
MergeResult decode_and_merge(const std::vector<ViewState>& states, NoisePredictor& decoder, const Mesh& mesh,
                             int texture_size, const SamplerSettings& settings);

}  // namespace gtex
