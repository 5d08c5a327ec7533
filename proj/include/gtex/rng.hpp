#pragma once

#include <cstdint>
#include <random>

#include "gtex/grid.hpp"

namespace gtex {

// Seeded standard-normal source. Every stochastic draw in a job goes through one instance in a
// fixed order, which is what makes seeded runs bit-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  float normal() { return normal_(engine_); }
  void fill_normal(Grid& grid) {
    for (float& v : grid.values()) v = normal_(engine_);
  }
  Grid normal_like(int channels, int height, int width, GridRole role) {
    Grid g(channels, height, width, role);
    fill_normal(g);
    return g;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<float> normal_{0.0f, 1.0f};
};

}  // namespace gtex
