#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "gtex/job.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Text-to-texture synthesis for UV-mapped triangle meshes"};
  app.require_subcommand(1);

  std::string config_path;
  std::string prompt;
  std::string mesh;
  std::string backend;
  std::string out;
  std::uint64_t seed = 0;
  bool mock = false;

  CLI::App* run = app.add_subcommand("run", "Synthesize a texture for a mesh");
  run->add_option("--config", config_path, "key = value configuration file");
  run->add_option("--prompt", prompt, "Text prompt");
  run->add_option("--mesh", mesh, "Wavefront OBJ mesh with UVs");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "Random seed");
  CLI::Option* backend_opt = run->add_option("--backend", backend, "Model service endpoint, e.g. http://localhost:8000");
  CLI::Option* mock_opt = run->add_flag("--mock", mock, "Use the built-in deterministic mock predictor");
  backend_opt->excludes(mock_opt);
  run->add_option("--out", out, "Output directory");

  CLI::App* defaults = app.add_subcommand("defaults", "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (defaults->parsed()) {
    std::cout << gtex::serialize_config(gtex::JobConfig{});
    return 0;
  }

  try {
    gtex::JobConfig config;
    if (!config_path.empty()) config = gtex::load_config(config_path);
    if (!prompt.empty()) config.prompt = prompt;
    if (!mesh.empty()) config.mesh_path = mesh;
    if (seed_opt->count() > 0) config.seed = seed;
    if (!backend.empty()) config.backend = backend;
    if (mock) config.backend = "mock";
    if (!out.empty()) config.output_dir = out;
    const gtex::JobOutcome outcome = gtex::run_job(config);
    if (outcome.exit_code != 0) {
      std::cerr << "gtex: " << (outcome.failed_stage.empty() ? "" : outcome.failed_stage + ": ") << outcome.error << "\n";
    }
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "gtex: " << e.what() << "\n";
    return 2;
  }
}
