#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gtex/geometry.hpp"
#include "gtex/grid.hpp"
#include "gtex/predictor.hpp"

namespace gtex {

struct ViewAngle {
  double elevation = 0.0;
  double azimuth = 0.0;

  friend bool operator==(const ViewAngle&, const ViewAngle&) = default;
};

std::vector<ViewAngle> sampling_preset();
std::vector<ViewAngle> inpainting_preset();
std::vector<ViewAngle> img2img_preset();

struct JobConfig {
  std::string mesh_path;
  std::string prompt;
  std::uint64_t seed = 0;
  int steps = 20;
  double cfg_scale = 7.5;
  int image_size = 512;
  int latent_factor = kLatentFactor;
  int texture_size = 1024;
  int latent_texture_size = 128;
  double tau = 0.1;
  double c_min = 0.1;
  double c_max = 0.9;
  double blur_sigma = 4.0;
  double strength = 0.4;
  double camera_distance = 2.0;
  double fov = 45.0;
  bool style_consistency = true;
  std::vector<ViewAngle> sampling_views = sampling_preset();
  std::vector<ViewAngle> inpainting_views = inpainting_preset();
  std::vector<ViewAngle> img2img_views = img2img_preset();
  std::string backend;  // "mock", an endpoint URL, or empty for GTEX_BACKEND / mock
  std::string mock_target = "depth-affine";
  std::string output_dir = "out";
  bool debug_steps = false;  // dump every step's latent textures

  void validate() const;
  std::vector<Camera> cameras(const std::vector<ViewAngle>& angles) const;
  PredictorBinding binding() const;

  friend bool operator==(const JobConfig&, const JobConfig&) = default;
};

// Plain-text "key = value" lines, values trimmed; lines starting with '#' are comments. Unknown keys
// are errors.
JobConfig parse_config(const std::string& text, JobConfig base = {});
JobConfig load_config(const std::filesystem::path& path, JobConfig base = {});
std::string serialize_config(const JobConfig& config);

struct JobOutcome {
  int exit_code = 0;
  std::string status;        // "ok" or "failed"
  std::string failed_stage;  // empty on success
  std::string error;
};

// Runs sampling, inpainting and img2img and writes the output directory. A mesh that cannot be
// found yields exit code 2 without creating any artifacts.
JobOutcome run_job(const JobConfig& config);

struct CanonicalView {
  std::string name;
  ViewAngle angle;
};
std::vector<CanonicalView> canonical_views();

// Renders the textured mesh from the front, back, top and both sides on a white background.
std::vector<Grid> export_canonical_renders(const Grid& texture, const Mesh& mesh, const JobConfig& config);

}  // namespace gtex
