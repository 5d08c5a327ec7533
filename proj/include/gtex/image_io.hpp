#pragma once

#include <filesystem>

#include "gtex/grid.hpp"

namespace gtex {

// 8-bit RGB PNG. Values are clamped to [0,1] and rounded to the nearest level.
void write_png(const std::filesystem::path& path, const Grid& rgb);
Grid read_png(const std::filesystem::path& path, GridRole role = GridRole::rgb_image);

}  // namespace gtex
