#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtex/geometry.hpp"
#include "gtex/grid.hpp"
#include "gtex/predictor.hpp"
#include "gtex/rng.hpp"
#include "gtex/schedule.hpp"

namespace gtex {

struct RefineSettings {
  int image_size = 512;
  double blur_sigma = 4.0;  // in latent texels (one latent texel spans kLatentFactor pixels)
  int inpaint_iterations = 13;
  double strength = 0.4;
  std::string prompt;
  double cfg_scale = 7.5;
  std::uint64_t seed = 0;
};

// Per-pixel blank indicator of one view: foreground pixels whose rendered blank flag is >= 0.5.
Grid render_blank_mask(const Mesh& mesh, const ViewBuffers& buffers, const std::vector<std::uint8_t>& blank,
                       int texture_size);

// Index of the view whose blank mask has the most set pixels (first wins ties), or -1 when every
// mask is empty.
int select_inpaint_view(const std::vector<Grid>& blank_masks);

struct InpaintResult {
  Grid texture;
  std::vector<std::uint8_t> blank;
  std::vector<std::size_t> blank_history;  // blank count before the epoch, then after each iteration
  std::vector<int> selected_views;
  int backend_calls = 0;
  bool aborted = false;
  std::string error;
};

InpaintResult inpaint_epoch(const Grid& texture, const std::vector<std::uint8_t>& blank, const Mesh& mesh,
                            const std::vector<Camera>& views, const Camera& reference_view, NoisePredictor& predictor,
                            const RefineSettings& settings);

// Per-channel CDF matching of the source's masked pixels onto the reference's masked pixels.
Grid histogram_match(const Grid& source, const Grid& reference, const Grid& mask);

struct Img2ImgResult {
  Grid texture;
  int backend_calls = 0;
  bool aborted = false;
  std::string error;
};

Img2ImgResult img2img_epoch(const Grid& texture, const Mesh& mesh, const std::vector<Camera>& views,
                            NoisePredictor& predictor, const Schedule& schedule, const RefineSettings& settings,
                            Rng& rng);

}  // namespace gtex
