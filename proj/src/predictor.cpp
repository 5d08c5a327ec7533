#include "gtex/predictor.hpp"

#include <cstdlib>

#include "gtex/mock_predictor.hpp"
#include "gtex/remote_predictor.hpp"

namespace gtex {
namespace {

void require_same_shapes(const std::vector<Grid>& grids, const char* what) {
  for (const Grid& g : grids) {
    if (!g.same_shape(grids.front())) throw std::invalid_argument(std::string(what) + " grids differ in shape");
    if (!all_finite(g)) throw std::invalid_argument(std::string(what) + " grids contain non-finite values");
  }
}

}  // namespace

void NoiseRequest::validate() const {
  if (latent_images.empty()) throw std::invalid_argument("noise request needs at least one view");
  if (depth_maps.size() != latent_images.size()) throw std::invalid_argument("one depth map per view is required");
  require_same_shapes(latent_images, "latent");
  require_same_shapes(depth_maps, "depth");
  const Grid& z = latent_images.front();
  const Grid& d = depth_maps.front();
  if (d.channels() != 1 || d.height() != z.height() || d.width() != z.width()) {
    throw std::invalid_argument("depth maps must be single-channel and match the latent resolution");
  }
  if (!(cfg_scale >= 1.0)) throw std::invalid_argument("cfg_scale must be at least 1");
}

void InpaintRequest::validate() const {
  if (canvas.channels() != 3) throw std::invalid_argument("inpaint canvas must be RGB");
  if (canvas.width() % 2 != 0) throw std::invalid_argument("inpaint canvas must be double width");
  if (mask.channels() != 1 || mask.height() != canvas.height() || mask.width() != canvas.width()) {
    throw std::invalid_argument("inpaint mask must match the canvas");
  }
  if (depth.channels() != 1 || depth.height() != canvas.height() || depth.width() != canvas.width()) {
    throw std::invalid_argument("inpaint depth must match the canvas");
  }
  if (!(cfg_scale >= 1.0)) throw std::invalid_argument("cfg_scale must be at least 1");
}

void PredictorBinding::validate() const {
  if (kind == Kind::remote && endpoint.empty()) throw std::invalid_argument("remote predictor needs an endpoint");
  if (kind == Kind::mock && !endpoint.empty()) throw std::invalid_argument("mock predictor takes no endpoint");
  if (kind == Kind::mock) MockPredictor::parse_target(mock_target_spec);
}

std::unique_ptr<NoisePredictor> make_predictor(const PredictorBinding& binding, const std::vector<double>& alpha_bar,
                                               int steps) {
  binding.validate();
  if (binding.kind == PredictorBinding::Kind::remote) return std::make_unique<RemotePredictor>(binding.endpoint);
  return std::make_unique<MockPredictor>(alpha_bar, steps, MockPredictor::parse_target(binding.mock_target_spec));
}

}  // namespace gtex
