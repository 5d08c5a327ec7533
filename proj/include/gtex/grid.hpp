#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace gtex {

enum class GridRole { latent_texture, latent_image, rgb_texture, rgb_image, mask };

std::string_view to_string(GridRole role);
bool is_texture_role(GridRole role);
bool is_image_role(GridRole role);
// latent_image -> latent_texture, rgb_image -> rgb_texture, mask -> mask.
GridRole texture_role_for(GridRole image_role);
GridRole image_role_for(GridRole texture_role);

// Channel-major (planar) scalar grid: values[(c * height + y) * width + x].
class Grid {
 public:
  Grid() = default;
  Grid(int channels, int height, int width, GridRole role, float fill = 0.0f);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  GridRole role() const { return role_; }
  void set_role(GridRole role) { role_ = role; }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  float& at(int c, int y, int x) { return values_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }
  float at(int c, int y, int x) const { return values_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x]; }

  std::span<float> plane(int c) { return {values_.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const { return {values_.data() + c * plane_size(), plane_size()}; }

  std::vector<float>& values() { return values_; }
  const std::vector<float>& values() const { return values_; }

  bool same_shape(const Grid& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  // Bilinear sample of channel c at continuous pixel coordinates, where pixel (x, y) covers
  // [x, x+1) x [y, y+1) and its center sits at (x + 0.5, y + 0.5). Clamp-to-edge addressing.
  float sample_bilinear(int c, double px, double py) const;

  friend bool operator==(const Grid& a, const Grid& b) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  GridRole role_ = GridRole::mask;
  std::vector<float> values_;
};

bool all_finite(const Grid& grid);
float max_abs_diff(const Grid& a, const Grid& b);

// Intermediate float dumps: 16-byte header {"GTEX", u32 channels, u32 height, u32 width},
// then little-endian f32 values in channel-major order.
void write_gtex(const std::filesystem::path& path, const Grid& grid);
Grid read_gtex(const std::filesystem::path& path, GridRole role);

}  // namespace gtex
