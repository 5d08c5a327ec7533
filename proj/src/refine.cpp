#include "gtex/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "gtex/image_ops.hpp"
#include "gtex/log.hpp"
#include "gtex/renderer.hpp"
#include "gtex/sampler.hpp"

namespace gtex {
namespace {

Grid blank_texture(const std::vector<std::uint8_t>& blank, int texture_size) {
  Grid t(1, texture_size, texture_size, GridRole::mask);
  for (std::size_t k = 0; k < blank.size(); ++k) t.values()[k] = blank[k] ? 1.0f : 0.0f;
  return t;
}

std::size_t count_set(const std::vector<std::uint8_t>& flags) {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

// Full-resolution normalized inverse depth, background 0.
Grid full_depth(const ViewBuffers& buffers) { return normalized_inverse_depth(buffers, 1); }

}  // namespace

Grid render_blank_mask(const Mesh& mesh, const ViewBuffers& buffers, const std::vector<std::uint8_t>& blank,
                       int texture_size) {
  if (blank.size() != static_cast<std::size_t>(texture_size) * texture_size) {
    throw std::invalid_argument("blank flags do not match the texture size");
  }
  Grid rendered = render(blank_texture(blank, texture_size), mesh, buffers);
  for (std::size_t k = 0; k < rendered.size(); ++k) {
    rendered.values()[k] = buffers.foreground[k] && rendered.values()[k] >= 0.5f ? 1.0f : 0.0f;
  }
  return rendered;
}

int select_inpaint_view(const std::vector<Grid>& blank_masks) {
  if (blank_masks.empty()) throw std::invalid_argument("view selection needs at least one view");
  int best = -1;
  std::size_t best_count = 0;
  for (std::size_t n = 0; n < blank_masks.size(); ++n) {
    const auto& v = blank_masks[n].values();
    const auto count = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](float x) { return x > 0.0f; }));
    if (count > best_count) {
      best_count = count;
      best = static_cast<int>(n);
    }
  }
  return best;
}

InpaintResult inpaint_epoch(const Grid& texture, const std::vector<std::uint8_t>& blank, const Mesh& mesh,
                            const std::vector<Camera>& views, const Camera& reference_view, NoisePredictor& predictor,
                            const RefineSettings& settings) {
  if (views.empty()) throw std::invalid_argument("inpainting needs at least one view");
  const int ts = texture.width();
  if (texture.height() != ts || blank.size() != static_cast<std::size_t>(ts) * ts) {
    throw std::invalid_argument("texture and blank flags must be square and of equal size");
  }
  InpaintResult result{texture, blank, {count_set(blank)}, {}, 0, false, {}};
  if (result.blank_history.front() == 0) return result;

  const int size = settings.image_size;
  std::vector<ViewBuffers> buffers;
  buffers.reserve(views.size());
  for (const Camera& c : views) buffers.push_back(rasterize_view(mesh, c.with_image_size(size)));
  const Camera ref_camera = reference_view.with_image_size(size);
  const ViewBuffers ref_buffers = rasterize_view(mesh, ref_camera);
  const Grid ref_depth = full_depth(ref_buffers);
  const double sigma_px = settings.blur_sigma * kLatentFactor;

  for (int iter = 0; iter < settings.inpaint_iterations; ++iter) {
    std::vector<Grid> masks;
    masks.reserve(views.size());
    for (const ViewBuffers& b : buffers) masks.push_back(render_blank_mask(mesh, b, result.blank, ts));
    const int v = select_inpaint_view(masks);
    if (v < 0) break;
    result.selected_views.push_back(v);
    const ViewBuffers& vb = buffers[static_cast<std::size_t>(v)];
    const Grid& mask = masks[static_cast<std::size_t>(v)];

    Grid blurred = gaussian_blur(mask, sigma_px);
    for (std::size_t k = 0; k < blurred.size(); ++k) blurred.values()[k] = std::max(blurred.values()[k], mask.values()[k]);

    const Grid target = render(result.texture, mesh, vb);
    const Grid reference = render(result.texture, mesh, ref_buffers);
    const Grid target_depth = full_depth(vb);

    InpaintRequest request;
    request.canvas = Grid(3, size, 2 * size, GridRole::rgb_image);
    request.mask = Grid(1, size, 2 * size, GridRole::mask);
    request.depth = Grid(1, size, 2 * size, GridRole::mask);
    request.prompt = settings.prompt;
    request.cfg_scale = settings.cfg_scale;
    request.seed = settings.seed + static_cast<std::uint64_t>(iter);
    request.reference_left = true;
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        for (int c = 0; c < 3; ++c) {
          request.canvas.at(c, y, x) = reference.at(c, y, x);
          request.canvas.at(c, y, x + size) = target.at(c, y, x);
        }
        request.mask.at(0, y, x + size) = blurred.at(0, y, x);
        request.depth.at(0, y, x) = ref_depth.at(0, y, x);
        request.depth.at(0, y, x + size) = target_depth.at(0, y, x);
      }
    }

    Grid filled;
    try {
      ++result.backend_calls;
      filled = predictor.inpaint(request);
    } catch (const std::exception& e) {
      result.aborted = true;
      result.error = e.what();
      warn(std::string("inpainting aborted: ") + e.what());
      return result;
    }
    Grid inpainted(3, size, size, GridRole::rgb_image);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) inpainted.at(c, y, x) = filled.at(c, y, x + size);
      }
    }

    const TexelFootprint fp = compute_footprints(mesh, views[static_cast<std::size_t>(v)].with_image_size(size), vb, ts);
    const InverseRendered new_content = inverse_render(inpainted, fp);
    const InverseRendered texel_mask = inverse_render(blurred, fp);
    for (std::size_t k = 0; k < fp.texels.size(); ++k) {
      if (!fp.texels[k].visible) continue;
      const float m = std::max(result.blank[k] ? 1.0f : 0.0f, texel_mask.texture.values()[k]);
      for (int c = 0; c < 3; ++c) {
        float& t = result.texture.plane(c)[k];
        t = t * (1.0f - m) + new_content.texture.plane(c)[k] * m;
      }
      result.blank[k] = 0;
    }
    result.blank_history.push_back(count_set(result.blank));
  }
  return result;
}

Grid histogram_match(const Grid& source, const Grid& reference, const Grid& mask) {
  if (!source.same_shape(reference)) throw std::invalid_argument("histogram matching needs equally shaped images");
  if (mask.channels() != 1 || mask.height() != source.height() || mask.width() != source.width()) {
    throw std::invalid_argument("histogram mask must match the image");
  }
  Grid out = source;
  const auto& m = mask.values();
  for (int c = 0; c < source.channels(); ++c) {
    std::map<float, std::size_t> src_hist, ref_hist;
    const auto src = source.plane(c);
    const auto ref = reference.plane(c);
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k] < 0.5f) continue;
      ++src_hist[src[k]];
      ++ref_hist[ref[k]];
    }
    if (src_hist.empty()) return source;
    // Quantile of each distinct value (cumulative share up to and including it).
    auto quantiles = [](const std::map<float, std::size_t>& hist, std::vector<double>& values, std::vector<double>& q) {
      std::size_t total = 0;
      for (const auto& [value, count] : hist) total += count;
      std::size_t cum = 0;
      for (const auto& [value, count] : hist) {
        cum += count;
        values.push_back(value);
        q.push_back(static_cast<double>(cum) / static_cast<double>(total));
      }
    };
    std::vector<double> sv, sq, rv, rq;
    quantiles(src_hist, sv, sq);
    quantiles(ref_hist, rv, rq);
    std::map<float, float> lut;
    std::size_t j = 0;
    for (std::size_t i = 0; i < sv.size(); ++i) {
      const double q = sq[i];
      while (j + 1 < rq.size() && rq[j] < q) ++j;
      double mapped;
      if (j == 0 || rq[j] <= q) {
        mapped = rv[j];
      } else {
        const double a = (q - rq[j - 1]) / (rq[j] - rq[j - 1]);
        mapped = rv[j - 1] + a * (rv[j] - rv[j - 1]);
      }
      if (q <= rq.front()) mapped = rv.front();
      lut[static_cast<float>(sv[i])] = static_cast<float>(mapped);
    }
    auto dst = out.plane(c);
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k] >= 0.5f) dst[k] = lut[src[k]];
    }
  }
  return out;
}

Img2ImgResult img2img_epoch(const Grid& texture, const Mesh& mesh, const std::vector<Camera>& views,
                            NoisePredictor& predictor, const Schedule& schedule, const RefineSettings& settings,
                            Rng& rng) {
  if (!(settings.strength > 0.0 && settings.strength < 1.0)) throw std::invalid_argument("img2img strength must lie in (0, 1)");
  Img2ImgResult result{texture, 0, false, {}};
  const int size = settings.image_size;
  const int ts = texture.width();
  const int k = static_cast<int>(std::lround(settings.strength * schedule.steps));
  const double alpha = schedule.alpha(k);
  for (std::size_t n = 0; n < views.size(); ++n) {
    const Camera camera = views[n].with_image_size(size);
    camera.validate(kLatentFactor);
    const ViewBuffers buffers = rasterize_view(mesh, camera);
    const Grid before = render(result.texture, mesh, buffers);
    try {
      ++result.backend_calls;
      Grid z = predictor.encode({before}).front();
      const Grid noise = rng.normal_like(z.channels(), z.height(), z.width(), GridRole::latent_image);
      for (std::size_t i = 0; i < z.size(); ++i) {
        z.values()[i] = static_cast<float>(std::sqrt(alpha) * z.values()[i] + std::sqrt(1.0 - alpha) * noise.values()[i]);
      }
      NoiseRequest request;
      request.latent_images = {z};
      request.depth_maps = {normalized_inverse_depth(buffers, kLatentFactor)};
      request.timestep = schedule.timestep(k);
      request.prompt = settings.prompt;
      request.cfg_scale = settings.cfg_scale;
      request.style_consistency = false;
      request.seed = settings.seed + n;
      ++result.backend_calls;
      const Grid denoised = predictor.img2img(request).front();
      ++result.backend_calls;
      const Grid decoded = predictor.decode({denoised}, false).front();
      const Grid matched = histogram_match(decoded, before, buffers.foreground_grid());

      const TexelFootprint fp = compute_footprints(mesh, camera, buffers, ts);
      const InverseRendered content = inverse_render(matched, fp);
      for (std::size_t t = 0; t < fp.texels.size(); ++t) {
        if (!fp.texels[t].visible) continue;
        const float s = std::clamp(fp.texels[t].normal_similarity, 0.0f, 1.0f);
        for (int c = 0; c < 3; ++c) {
          float& v = result.texture.plane(c)[t];
          v = v * (1.0f - s) + content.texture.plane(c)[t] * s;
        }
      }
    } catch (const std::exception& e) {
      result.aborted = true;
      result.error = e.what();
      warn(std::string("img2img aborted: ") + e.what());
      return result;
    }
  }
  return result;
}

}  // namespace gtex
