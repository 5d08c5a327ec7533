#include "gtex/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gtex {

Grid gaussian_blur(const Grid& grid, double sigma) {
  if (!(sigma > 0.0)) return grid;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * k * k / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;

  const int h = grid.height();
  const int w = grid.width();
  Grid tmp(grid.channels(), h, w, grid.role());
  Grid out(grid.channels(), h, w, grid.role());
  for (int c = 0; c < grid.channels(); ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * grid.at(c, y, std::clamp(x + k, 0, w - 1));
        }
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * tmp.at(c, std::clamp(y + k, 0, h - 1), x);
        }
        out.at(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Grid upsample_bilinear(const Grid& grid, int factor, GridRole role) {
  if (factor <= 0) throw std::invalid_argument("upsample factor must be positive");
  Grid out(grid.channels(), grid.height() * factor, grid.width() * factor, role);
  for (int c = 0; c < grid.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        out.at(c, y, x) = grid.sample_bilinear(c, (x + 0.5) / factor, (y + 0.5) / factor);
      }
    }
  }
  return out;
}

void harmonic_fill(Grid& image, const std::vector<FillClass>& classes) {
  const int h = image.height();
  const int w = image.width();
  if (classes.size() != image.plane_size()) throw std::invalid_argument("fill classes do not match image");

  std::vector<std::size_t> unknown;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == FillClass::unknown) unknown.push_back(i);
  }
  if (unknown.empty()) return;

  for (int c = 0; c < image.channels(); ++c) {
    auto plane = image.plane(c);
    double known_sum = 0.0;
    std::size_t known_count = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] == FillClass::known) {
        known_sum += plane[i];
        ++known_count;
      }
    }
    const float mean = known_count ? static_cast<float>(known_sum / known_count) : 0.5f;
    for (std::size_t i : unknown) plane[i] = mean;

    // Successive over-relaxation in a fixed raster order (deterministic).
    constexpr double kOmega = 1.9;
    constexpr int kMaxIterations = 4000;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
      double max_delta = 0.0;
      for (std::size_t i : unknown) {
        const int x = static_cast<int>(i % static_cast<std::size_t>(w));
        const int y = static_cast<int>(i / static_cast<std::size_t>(w));
        double sum = 0.0;
        int n = 0;
        const int nx[4] = {x - 1, x + 1, x, x};
        const int ny[4] = {y, y, y - 1, y + 1};
        for (int k = 0; k < 4; ++k) {
          if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny[k]) * w + nx[k];
          if (classes[j] == FillClass::excluded) continue;
          sum += plane[j];
          ++n;
        }
        if (n == 0) continue;
        const double target = sum / n;
        const double delta = kOmega * (target - plane[i]);
        plane[i] = static_cast<float>(plane[i] + delta);
        max_delta = std::max(max_delta, std::abs(delta));
      }
      if (max_delta < 1e-5) break;
    }
  }
}

}  // namespace gtex
