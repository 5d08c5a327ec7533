#include "gtex/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gtex {

std::vector<double> scaled_linear_alpha_bar(int train_steps, double beta_start, double beta_end) {
  if (train_steps < 2) throw std::invalid_argument("need at least two training steps");
  std::vector<double> alpha_bar(static_cast<std::size_t>(train_steps));
  const double s0 = std::sqrt(beta_start);
  const double s1 = std::sqrt(beta_end);
  double prod = 1.0;
  for (int t = 0; t < train_steps; ++t) {
    const double s = s0 + (s1 - s0) * t / (train_steps - 1);
    prod *= 1.0 - s * s;
    alpha_bar[static_cast<std::size_t>(t)] = prod;
  }
  return alpha_bar;
}

double Schedule::noise_coefficient(int i) const {
  const double s = sigma(i + 1);
  const double radicand = 1.0 - alpha(i) - s * s;
  if (radicand < -1e-12) throw std::domain_error("schedule invariant violated: 1 - alpha_i - sigma_{i+1}^2 < 0");
  return std::sqrt(std::max(0.0, radicand));
}

int Schedule::step_for_timestep(int t) const {
  for (int i = 0; i <= steps; ++i) {
    if (timesteps[static_cast<std::size_t>(i)] == t) return i;
  }
  return -1;
}

Schedule build_schedule(int steps, std::span<const double> alpha_bar) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
  const int n = static_cast<int>(alpha_bar.size());
  if (n < 2) throw std::invalid_argument("alpha table too short");
  for (int t = 0; t < n; ++t) {
    if (!(alpha_bar[t] > 0.0 && alpha_bar[t] <= 1.0)) throw std::invalid_argument("alpha table outside (0, 1]");
    if (t > 0 && !(alpha_bar[t] < alpha_bar[t - 1])) {
      throw std::invalid_argument("alpha table is not strictly decreasing in model time");
    }
  }
  if (steps > n - 1) throw std::invalid_argument("more sampling steps than model timesteps");

  Schedule s;
  s.steps = steps;
  s.timesteps.resize(static_cast<std::size_t>(steps) + 1);
  s.alphas.resize(static_cast<std::size_t>(steps) + 1);
  s.sigmas.assign(static_cast<std::size_t>(steps) + 2, 0.0);
  for (int i = 0; i <= steps; ++i) {
    const int t = static_cast<int>(std::lround(static_cast<double>(i) * (n - 1) / steps));
    s.timesteps[static_cast<std::size_t>(i)] = t;
    s.alphas[static_cast<std::size_t>(i)] = i == 0 ? 1.0 : alpha_bar[static_cast<std::size_t>(t)];
  }
  for (int i = 1; i <= steps; ++i) {
    const double a = s.alphas[static_cast<std::size_t>(i)];
    const double a_prev = s.alphas[static_cast<std::size_t>(i) - 1];
    s.sigmas[static_cast<std::size_t>(i)] = std::sqrt((1.0 - a_prev) / (1.0 - a)) * std::sqrt(1.0 - a / a_prev);
  }
  return s;
}

AlignmentSchedule AlignmentSchedule::constant(int steps, double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("alignment strength outside [0, 1]");
  return {std::vector<double>(static_cast<std::size_t>(steps) + 1, c)};
}

AlignmentSchedule AlignmentSchedule::raised_cosine(int steps, double c_min, double c_max) {
  if (!(c_min >= 0.0 && c_max <= 1.0 && c_min <= c_max)) throw std::invalid_argument("alignment range outside [0, 1]");
  AlignmentSchedule a;
  a.values.resize(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    const double s = std::sin(std::numbers::pi * i / steps);
    a.values[static_cast<std::size_t>(i)] = c_min + (c_max - c_min) * s * s;
  }
  return a;
}

}  // namespace gtex
