#pragma once

#include <cstdint>
#include <vector>

#include "gtex/geometry.hpp"
#include "gtex/grid.hpp"

namespace gtex {

// Samples `texture` bilinearly at UV coordinates; the texture's row 0 sits at v = 1.
float sample_texture(const Grid& texture, int channel, Vec2 uv);

// Lighting-free rendering: every foreground pixel is the bilinear texture sample at the UV
// interpolated from its barycentrics; background pixels are 0.
Grid render(const Grid& texture, const Mesh& mesh, const ViewBuffers& buffers);

struct TexelInfo {
  bool charted = false;
  bool visible = false;
  double px = 0.0;  // projected position in buffer pixel units
  double py = 0.0;
  double depth = 0.0;
  float normal_similarity = 0.0f;
};

// Per-texel projection of the UV-space surface into one view (the support of inverse rendering).
struct TexelFootprint {
  int texture_size = 0;
  int image_size = 0;  // resolution of the buffers used for the visibility test
  std::vector<TexelInfo> texels;
  std::vector<std::uint8_t> image_foreground;  // buffers.foreground, for masked image taps

  std::size_t visible_count() const;
  std::size_t charted_count() const;
  Grid weight() const;
  // Similarity of the owning face, clamped to [0, 1] on visible texels and 0 elsewhere.
  Grid similarity() const;
};

// Visibility depth tolerance relative to the scene bounding-box diagonal.
inline constexpr double kDepthEpsilonScale = 1e-3;

TexelFootprint compute_footprints(const Mesh& mesh, const Camera& camera, const ViewBuffers& buffers,
                                  int texture_size);

struct InverseRendered {
  Grid texture;
  Grid weight;
};

// Texel-centric gather: visible texels take a bilinear sample of `image` at their projected
// position (background taps excluded and the remaining weights renormalized) with weight 1;
// other texels get value 0 and weight 0, then values are dilated `kSeamDilation` texels into
// zero-weight neighbours. The image may be any integer downsampling of the footprint's buffers.
InverseRendered inverse_render(const Grid& image, const TexelFootprint& footprints);

inline constexpr int kSeamDilation = 2;

// Extends values from texels with `known` != 0 into unknown neighbours, one ring per pass. The
// `known` mask itself is not modified.
void dilate_values(Grid& grid, const std::vector<std::uint8_t>& known, int passes);

// Area-average pooling by an integer factor.
Grid downsample_mask(const Grid& mask, int factor);

}  // namespace gtex
