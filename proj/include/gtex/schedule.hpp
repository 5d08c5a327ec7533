#pragma once

#include <span>
#include <vector>

namespace gtex {

// Cumulative signal coefficients of the scaled-linear beta schedule used by latent diffusion
// models (beta from 0.00085 to 0.012 over 1000 training steps).
std::vector<double> scaled_linear_alpha_bar(int train_steps = 1000, double beta_start = 0.00085,
                                            double beta_end = 0.012);

// DDIM sampling tables indexed by step i = 0..T (i = T is the noisiest step).
struct Schedule {
  int steps = 0;
  std::vector<int> timesteps;  // t_i, linear in i; t_0 = 0
  std::vector<double> alphas;  // alpha_i = alpha_bar(t_i) for i >= 1, alpha_0 = 1
  std::vector<double> sigmas;  // sigma_i for i = 1..T+1; sigma_0 unused (0), sigma_{T+1} = 0

  double alpha(int i) const { return alphas.at(static_cast<std::size_t>(i)); }
  double sigma(int i) const { return sigmas.at(static_cast<std::size_t>(i)); }
  int timestep(int i) const { return timesteps.at(static_cast<std::size_t>(i)); }
  // sqrt(1 - alpha_i - sigma_{i+1}^2); throws when the radicand is negative.
  double noise_coefficient(int i) const;
  // Step index whose model time equals t, or -1.
  int step_for_timestep(int t) const;
};

// Linear time schedule over the model's time range, with
// sigma_i = sqrt((1 - a_{i-1}) / (1 - a_i)) * sqrt(1 - a_i / a_{i-1}).
Schedule build_schedule(int steps, std::span<const double> alpha_bar);

// c(t_i) per step, indexed by i = 0..T.
struct AlignmentSchedule {
  std::vector<double> values;

  double at(int i) const { return values.at(static_cast<std::size_t>(i)); }
  static AlignmentSchedule constant(int steps, double c);
  // c_min + (c_max - c_min) * sin^2(pi * i / T): weak at both ends, strongest mid-way.
  static AlignmentSchedule raised_cosine(int steps, double c_min, double c_max);
};

}  // namespace gtex
