#pragma once

#include <cstdint>
#include <vector>

#include "gtex/grid.hpp"

namespace gtex {

// Separable Gaussian blur with clamp-to-edge borders; the kernel is truncated at 3 sigma, so
// pixels farther than that from any non-zero input stay exactly 0.
Grid gaussian_blur(const Grid& grid, double sigma);

// Bilinear upsampling by an integer factor (pixel-center aligned, clamp-to-edge).
Grid upsample_bilinear(const Grid& grid, int factor, GridRole role);

enum class FillClass : std::uint8_t { excluded = 0, known = 1, unknown = 2 };

// Replaces `unknown` pixels with the discrete harmonic interpolant of the surrounding `known`
// pixels (4-neighbour Laplace equation, excluded pixels act as no-flux borders). Components that
// touch no known pixel take the mean of all known pixels.
void harmonic_fill(Grid& image, const std::vector<FillClass>& classes);

}  // namespace gtex
