#include "gtex/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gtex/parallel.hpp"

namespace gtex {

void SamplerSettings::validate() const {
  if (image_size <= 0 || image_size % kLatentFactor != 0) {
    throw std::invalid_argument("image size must be a positive multiple of " + std::to_string(kLatentFactor));
  }
  if (latent_texture_size <= 0) throw std::invalid_argument("latent texture size must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  if (!(cfg_scale >= 1.0)) throw std::invalid_argument("cfg_scale must be at least 1");
}

Grid normalized_inverse_depth(const ViewBuffers& buffers, int factor) {
  Grid d(1, buffers.size, buffers.size, GridRole::mask);
  float peak = 0.0f;
  for (std::size_t i = 0; i < buffers.depth.size(); ++i) {
    if (!buffers.foreground[i]) continue;
    d.values()[i] = 1.0f / buffers.depth[i];
    peak = std::max(peak, d.values()[i]);
  }
  if (peak > 0.0f) {
    for (float& v : d.values()) v /= peak;
  }
  return downsample_mask(d, factor);
}

std::vector<ViewState> init_states(const Mesh& mesh, const std::vector<Camera>& cameras, const SamplerSettings& settings,
                                   Rng& rng) {
  settings.validate();
  if (cameras.empty()) throw std::invalid_argument("at least one sampling view is required");
  const int latent = settings.latent_size();
  const int lt = settings.latent_texture_size;
  std::vector<ViewState> states;
  states.reserve(cameras.size());
  for (const Camera& cam : cameras) {
    const Camera camera = cam.with_image_size(settings.image_size);
    camera.validate(kLatentFactor);
    ViewState s;
    s.camera = camera;
    s.buffers = rasterize_view(mesh, camera);
    s.latent_buffers = rasterize_view(mesh, camera.with_image_size(latent));
    s.footprint = compute_footprints(mesh, camera, s.buffers, lt);
    s.depth_map = normalized_inverse_depth(s.buffers, kLatentFactor);
    s.foreground_mask = downsample_mask(s.buffers.foreground_grid(), kLatentFactor);
    s.similarity = downsample_mask(s.buffers.similarity_grid(), kLatentFactor);
    s.background = rng.normal_like(kLatentChannels, latent, latent, GridRole::latent_image);
    s.cached_noise = rng.normal_like(kLatentChannels, latent, latent, GridRole::latent_image);
    s.latent_texture = Grid(kLatentChannels, lt, lt, GridRole::latent_texture);
    s.texture_weight = s.footprint.weight();
    s.texture_similarity = s.footprint.similarity();
    s.z0_hat = Grid(kLatentChannels, latent, latent, GridRole::latent_image);
    states.push_back(std::move(s));
  }
  return states;
}

Grid compose_latent_image(const ViewState& state, const Mesh& mesh, const Schedule& schedule, int i, Rng& rng) {
  const double sa = std::sqrt(schedule.alpha(i));
  const double coef = schedule.noise_coefficient(i);
  const double sigma = schedule.sigma(i + 1);
  const Grid rendered = render(state.latent_texture, mesh, state.latent_buffers);
  Grid out = rng.normal_like(kLatentChannels, rendered.height(), rendered.width(), GridRole::latent_image);
  const auto& m = state.foreground_mask.values();
  const std::size_t plane = out.plane_size();
  for (int c = 0; c < kLatentChannels; ++c) {
    auto dst = out.plane(c);
    const auto r = rendered.plane(c);
    const auto e = state.cached_noise.plane(c);
    const auto bg = state.background.plane(c);
    for (std::size_t k = 0; k < plane; ++k) {
      const double mk = m[k];
      const double fg = sa * r[k] + coef * e[k];
      dst[k] = static_cast<float>(mk * fg + (1.0 - mk) * bg[k] + sigma * dst[k]);
    }
  }
  return out;
}

Grid predict_z0(const Grid& z_img, const Grid& eps_hat, double alpha) {
  if (!z_img.same_shape(eps_hat)) throw std::invalid_argument("latent and noise shapes differ");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside (0, 1]");
  const double sa = std::sqrt(alpha);
  const double s1 = std::sqrt(1.0 - alpha);
  Grid out(z_img.channels(), z_img.height(), z_img.width(), GridRole::latent_image);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.values()[k] = static_cast<float>((z_img.values()[k] - s1 * eps_hat.values()[k]) / sa);
  }
  return out;
}

void update_after_prediction(ViewState& state, const Grid& z0_hat, const Grid& eps_hat, const Schedule& schedule,
                             int i) {
  const InverseRendered inv = inverse_render(z0_hat, state.footprint);
  const std::size_t plane = state.latent_texture.plane_size();
  for (std::size_t k = 0; k < plane; ++k) {
    const TexelInfo& t = state.footprint.texels[k];
    // Visible texels take the new estimate; uncharted texels carry seam padding; charted texels
    // hidden from this view keep their previous value.
    if (!t.visible && t.charted) continue;
    for (int c = 0; c < kLatentChannels; ++c) state.latent_texture.plane(c)[k] = inv.texture.plane(c)[k];
  }
  const double sa = std::sqrt(schedule.alpha(i - 1));
  const double coef = schedule.noise_coefficient(i - 1);
  for (std::size_t k = 0; k < state.background.size(); ++k) {
    state.background.values()[k] = static_cast<float>(sa * z0_hat.values()[k] + coef * eps_hat.values()[k]);
  }
  state.cached_noise = eps_hat;
  state.z0_hat = z0_hat;
}

std::vector<Grid> compute_view_weights(const std::vector<Grid>& similarities, const std::vector<Grid>& weights,
                                       double tau) {
  if (similarities.size() != weights.size()) throw std::invalid_argument("one weight grid per similarity grid");
  if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
  std::vector<Grid> out;
  if (similarities.empty()) return out;
  const Grid& ref = similarities.front();
  for (std::size_t n = 0; n < similarities.size(); ++n) {
    if (!similarities[n].same_shape(ref) || !weights[n].same_shape(ref)) {
      throw std::invalid_argument("view weight grids differ in shape");
    }
    out.emplace_back(1, ref.height(), ref.width(), GridRole::mask);
  }
  const std::size_t views = similarities.size();
  const int h = ref.height();
  const int w = ref.width();
  parallel_for(0, h, [&](int y) {
    std::vector<double> e(views);
    for (int x = 0; x < w; ++x) {
      const std::size_t k = static_cast<std::size_t>(y) * w + x;
      double peak = -INFINITY;
      for (std::size_t n = 0; n < views; ++n) {
        if (weights[n].values()[k] > 0.0f) peak = std::max(peak, static_cast<double>(similarities[n].values()[k]));
      }
      if (peak == -INFINITY) continue;
      double total = 0.0;
      for (std::size_t n = 0; n < views; ++n) {
        e[n] = weights[n].values()[k] > 0.0f ? std::exp((similarities[n].values()[k] - peak) / tau) : 0.0;
        total += e[n];
      }
      for (std::size_t n = 0; n < views; ++n) out[n].values()[k] = static_cast<float>(e[n] / total);
    }
  });
  return out;
}

void dynamic_align(std::vector<ViewState>& states, double c, double tau) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("alignment strength outside [0, 1]");
  if (c == 0.0 || states.empty()) return;
  std::vector<Grid> sims, weights;
  for (const ViewState& s : states) {
    sims.push_back(s.texture_similarity);
    weights.push_back(s.texture_weight);
  }
  const auto view_weights = compute_view_weights(sims, weights, tau);
  const Grid& first = states.front().latent_texture;
  const std::size_t plane = first.plane_size();
  for (int ch = 0; ch < first.channels(); ++ch) {
    for (std::size_t k = 0; k < plane; ++k) {
      double uni = 0.0;
      bool covered = false;
      for (std::size_t n = 0; n < states.size(); ++n) {
        if (states[n].texture_weight.values()[k] <= 0.0f) continue;
        covered = true;
        uni += static_cast<double>(view_weights[n].values()[k]) * states[n].latent_texture.plane(ch)[k];
      }
      if (!covered) continue;
      for (ViewState& s : states) {
        if (s.texture_weight.values()[k] <= 0.0f) continue;
        float& v = s.latent_texture.plane(ch)[k];
        v = static_cast<float>(c * uni + (1.0 - c) * v);
      }
    }
  }
}

void denoise(std::vector<ViewState>& states, const Mesh& mesh, const Schedule& schedule,
             const AlignmentSchedule& alignment, NoisePredictor& predictor, const SamplerSettings& settings, Rng& rng,
             const StepObserver& observer) {
  if (states.empty()) throw std::invalid_argument("no views to denoise");
  NoiseRequest request;
  request.prompt = settings.prompt;
  request.cfg_scale = settings.cfg_scale;
  request.style_consistency = settings.style_consistency;
  request.seed = settings.seed;
  for (const ViewState& s : states) request.depth_maps.push_back(s.depth_map);

  for (int i = schedule.steps; i >= 1; --i) {
    request.latent_images.clear();
    for (const ViewState& s : states) request.latent_images.push_back(compose_latent_image(s, mesh, schedule, i, rng));
    request.timestep = schedule.timestep(i);
    std::vector<Grid> eps;
    try {
      eps = predictor.predict_noise(request);
    } catch (const PredictorError&) {
      throw;
    } catch (const std::exception& e) {
      throw PredictorError(std::string("noise prediction failed: ") + e.what(), true);
    }
    if (eps.size() != states.size()) throw PredictorError("predictor returned the wrong number of views", true);
    const double alpha = schedule.alpha(i);
    parallel_for(0, static_cast<int>(states.size()), [&](int n) {
      const Grid z0 = predict_z0(request.latent_images[static_cast<std::size_t>(n)], eps[static_cast<std::size_t>(n)], alpha);
      update_after_prediction(states[static_cast<std::size_t>(n)], z0, eps[static_cast<std::size_t>(n)], schedule, i);
    });
    dynamic_align(states, alignment.at(i), settings.tau);
    if (observer) observer(StepRecord{i, request.latent_images, states});
  }
}

std::size_t MergeResult::blank_count() const {
  return static_cast<std::size_t>(std::count(blank.begin(), blank.end(), std::uint8_t{1}));
}

MergeResult decode_and_merge(const std::vector<ViewState>& states, NoisePredictor& decoder, const Mesh& mesh,
                             int texture_size, const SamplerSettings& settings) {
  if (states.empty()) throw std::invalid_argument("no views to merge");
  std::vector<Grid> latents;
  for (const ViewState& s : states) latents.push_back(s.z0_hat);
  MergeResult result;
  result.view_images = decoder.decode(latents, settings.style_consistency);
  if (result.view_images.size() != states.size()) throw PredictorError("decoder returned the wrong number of views", true);

  std::vector<Grid> textures, sims, weights;
  std::vector<TexelFootprint> footprints;
  for (std::size_t n = 0; n < states.size(); ++n) {
    TexelFootprint fp = compute_footprints(mesh, states[n].camera, states[n].buffers, texture_size);
    InverseRendered inv = inverse_render(result.view_images[n], fp);
    textures.push_back(std::move(inv.texture));
    weights.push_back(std::move(inv.weight));
    sims.push_back(fp.similarity());
    if (n == 0) {
      result.charted.resize(fp.texels.size());
      for (std::size_t k = 0; k < fp.texels.size(); ++k) result.charted[k] = fp.texels[k].charted ? 1 : 0;
    }
  }
  result.view_weights = compute_view_weights(sims, weights, settings.tau);

  const std::size_t plane = static_cast<std::size_t>(texture_size) * texture_size;
  result.texture = Grid(3, texture_size, texture_size, GridRole::rgb_texture);
  result.blank.assign(plane, 0);
  std::vector<std::uint8_t> covered(plane, 0);
  for (std::size_t k = 0; k < plane; ++k) {
    for (std::size_t n = 0; n < states.size(); ++n) {
      if (weights[n].values()[k] > 0.0f) covered[k] = 1;
    }
    if (!covered[k]) {
      result.blank[k] = result.charted[k];
      continue;
    }
    for (int c = 0; c < 3; ++c) {
      double v = 0.0;
      for (std::size_t n = 0; n < states.size(); ++n) {
        if (weights[n].values()[k] > 0.0f) v += static_cast<double>(result.view_weights[n].values()[k]) * textures[n].plane(c)[k];
      }
      result.texture.plane(c)[k] = static_cast<float>(v);
    }
  }
  dilate_values(result.texture, covered, kSeamDilation);
  return result;
}

}  // namespace gtex
