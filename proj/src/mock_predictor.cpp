#include "gtex/mock_predictor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gtex/image_ops.hpp"
#include "gtex/renderer.hpp"

namespace gtex {

MockPredictor::MockPredictor(std::vector<double> alpha_bar, int steps, Target target)
    : alpha_bar_(std::move(alpha_bar)), schedule_(build_schedule(steps, alpha_bar_)), target_(target) {}

MockPredictor::Target MockPredictor::parse_target(const std::string& spec) {
  if (spec == "depth-affine" || spec.empty()) return Target::depth_affine;
  if (spec == "constant") return Target::constant;
  throw std::invalid_argument("unknown mock target '" + spec + "'");
}

double MockPredictor::alpha_at(int timestep) const {
  if (timestep < 0 || static_cast<std::size_t>(timestep) >= alpha_bar_.size()) {
    throw PredictorError("timestep " + std::to_string(timestep) + " outside the schedule", false);
  }
  return alpha_bar_[static_cast<std::size_t>(timestep)];
}

std::vector<Grid> MockPredictor::targets(const std::vector<Grid>& depth_maps, bool style_consistency) const {
  std::vector<Grid> out;
  out.reserve(depth_maps.size());
  for (const Grid& d : depth_maps) {
    Grid g(kLatentChannels, d.height(), d.width(), GridRole::latent_image);
    for (std::size_t i = 0; i < d.plane_size(); ++i) {
      const float depth = target_ == Target::constant ? 0.5f : d.values()[i];
      const float value = 0.25f + 0.5f * depth;
      for (int c = 0; c < kLatentChannels; ++c) g.plane(c)[i] = value;
    }
    out.push_back(std::move(g));
  }
  if (style_consistency && out.size() > 1) {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < depth_maps.front().plane_size(); ++i) {
      float lo = depth_maps[0].values()[i];
      float hi = lo;
      for (const Grid& d : depth_maps) {
        lo = std::min(lo, d.values()[i]);
        hi = std::max(hi, d.values()[i]);
      }
      if (hi - lo > 1e-3f) continue;
      for (int c = 0; c < kLatentChannels; ++c) {
        double sum = 0.0;
        for (const Grid& g : out) sum += g.plane(c)[i];
        const auto mean = static_cast<float>(sum / static_cast<double>(n));
        for (Grid& g : out) g.plane(c)[i] = mean;
      }
    }
  }
  return out;
}

std::vector<Grid> MockPredictor::predict_noise(const NoiseRequest& request) {
  request.validate();
  ++calls_;
  const double alpha = alpha_at(request.timestep);
  const double sa = std::sqrt(alpha);
  const double s1 = std::sqrt(1.0 - alpha);
  const auto g = targets(request.depth_maps, request.style_consistency);
  std::vector<Grid> eps;
  eps.reserve(request.latent_images.size());
  for (std::size_t n = 0; n < request.latent_images.size(); ++n) {
    const Grid& z = request.latent_images[n];
    Grid e(z.channels(), z.height(), z.width(), GridRole::latent_image);
    for (std::size_t i = 0; i < z.size(); ++i) {
      e.values()[i] = static_cast<float>((z.values()[i] - sa * g[n].values()[i]) / s1);
    }
    eps.push_back(std::move(e));
  }
  return eps;
}

std::vector<Grid> MockPredictor::encode(const std::vector<Grid>& images) {
  std::vector<Grid> out;
  for (const Grid& img : images) {
    if (img.channels() != 3 || img.height() % kLatentFactor || img.width() % kLatentFactor) {
      throw std::invalid_argument("encode expects RGB images with dimensions divisible by 8");
    }
    const Grid pooled = downsample_mask(img, kLatentFactor);
    Grid z(kLatentChannels, pooled.height(), pooled.width(), GridRole::latent_image);
    for (int c = 0; c < 3; ++c) std::copy(pooled.plane(c).begin(), pooled.plane(c).end(), z.plane(c).begin());
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<Grid> MockPredictor::decode(const std::vector<Grid>& latents, bool) {
  std::vector<Grid> out;
  for (const Grid& z : latents) {
    if (z.channels() != kLatentChannels) throw std::invalid_argument("decode expects 4-channel latents");
    Grid rgb_latent(3, z.height(), z.width(), GridRole::latent_image);
    for (int c = 0; c < 3; ++c) std::copy(z.plane(c).begin(), z.plane(c).end(), rgb_latent.plane(c).begin());
    Grid x = upsample_bilinear(rgb_latent, kLatentFactor, GridRole::rgb_image);
    for (float& v : x.values()) v = std::clamp(v, 0.0f, 1.0f);
    out.push_back(std::move(x));
  }
  return out;
}

Grid MockPredictor::inpaint(const InpaintRequest& request) {
  request.validate();
  ++calls_;
  Grid out = request.canvas;
  const int w = out.width();
  const int half = w / 2;
  std::vector<FillClass> classes(out.plane_size(), FillClass::excluded);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const bool target_half = request.reference_left ? x >= half : x < half;
      if (!target_half || request.depth.values()[i] <= 0.0f) continue;
      classes[i] = request.mask.values()[i] >= 0.5f ? FillClass::unknown : FillClass::known;
    }
  }
  harmonic_fill(out, classes);
  return out;
}

std::vector<Grid> MockPredictor::img2img(const NoiseRequest& request) {
  request.validate();
  ++calls_;
  const int start = schedule_.step_for_timestep(request.timestep);
  if (start < 0) throw PredictorError("img2img timestep " + std::to_string(request.timestep) + " not on the schedule", false);
  std::vector<Grid> z = request.latent_images;
  // Deterministic DDIM (sigma = 0) from the start step down to t = 0.
  for (int i = start; i >= 1; --i) {
    NoiseRequest step = request;
    step.latent_images = z;
    step.timestep = schedule_.timestep(i);
    const auto eps = predict_noise(step);
    --calls_;
    const double a = schedule_.alpha(i);
    const double a_prev = schedule_.alpha(i - 1);
    for (std::size_t n = 0; n < z.size(); ++n) {
      for (std::size_t k = 0; k < z[n].size(); ++k) {
        const double z0 = (z[n].values()[k] - std::sqrt(1.0 - a) * eps[n].values()[k]) / std::sqrt(a);
        z[n].values()[k] = static_cast<float>(std::sqrt(a_prev) * z0 + std::sqrt(1.0 - a_prev) * eps[n].values()[k]);
      }
    }
  }
  return z;
}

}  // namespace gtex
