#include "gtex/job.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "gtex/image_io.hpp"
#include "gtex/log.hpp"
#include "gtex/refine.hpp"
#include "gtex/remote_predictor.hpp"
#include "gtex/renderer.hpp"
#include "gtex/sampler.hpp"
#include "gtex/schedule.hpp"

namespace gtex {

std::vector<ViewAngle> sampling_preset() { return {{0, 0}, {0, 90}, {0, 180}, {0, 270}}; }

std::vector<ViewAngle> inpainting_preset() {
  return {{90, 0},  {0, 45},   {0, 315},  {0, 135},  {0, 225},  {60, 0},  {60, 45},
          {60, 315}, {60, 90}, {60, 270}, {60, 135}, {60, 225}, {60, 180}};
}

std::vector<ViewAngle> img2img_preset() {
  return {{0, 180}, {0, 270}, {0, 135}, {0, 45}, {0, 225}, {0, 315}, {0, 90}, {0, 0}};
}

std::vector<CanonicalView> canonical_views() {
  return {{"front", {0, 0}}, {"back", {0, 180}}, {"top", {90, 0}}, {"right", {0, 90}}, {"left", {0, 270}}};
}

void JobConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (!(cfg_scale >= 1.0)) throw std::invalid_argument("cfg_scale must be at least 1");
  if (latent_factor != kLatentFactor) {
    throw std::invalid_argument("latent_factor must be " + std::to_string(kLatentFactor) + " for this latent model");
  }
  if (image_size <= 0 || image_size % latent_factor != 0) {
    throw std::invalid_argument("image_size must be a positive multiple of latent_factor");
  }
  if (texture_size <= 0 || latent_texture_size <= 0) throw std::invalid_argument("texture sizes must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(c_min >= 0.0 && c_max <= 1.0 && c_min <= c_max)) throw std::invalid_argument("need 0 <= c_min <= c_max <= 1");
  if (!(blur_sigma > 0.0)) throw std::invalid_argument("blur_sigma must be positive");
  if (!(strength > 0.0 && strength < 1.0)) throw std::invalid_argument("strength must lie in (0, 1)");
  if (sampling_views.empty() || inpainting_views.empty() || img2img_views.empty()) {
    throw std::invalid_argument("camera sets must be nonempty");
  }
  for (const auto* set : {&sampling_views, &inpainting_views, &img2img_views}) {
    for (const Camera& c : cameras(*set)) c.validate(latent_factor);
  }
}

std::vector<Camera> JobConfig::cameras(const std::vector<ViewAngle>& angles) const {
  std::vector<Camera> out;
  for (const ViewAngle& a : angles) {
    Camera c;
    c.elevation = a.elevation;
    c.azimuth = a.azimuth;
    c.distance = camera_distance;
    c.fov_y = fov;
    c.image_size = image_size;
    out.push_back(c);
  }
  return out;
}

PredictorBinding JobConfig::binding() const {
  PredictorBinding b;
  std::string endpoint = backend;
  if (endpoint.empty()) endpoint = RemotePredictor::endpoint_from_env();
  if (endpoint.empty() || endpoint == "mock") {
    b.kind = PredictorBinding::Kind::mock;
    b.mock_target_spec = mock_target;
  } else {
    b.kind = PredictorBinding::Kind::remote;
    b.endpoint = endpoint;
  }
  return b;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected a boolean, got '" + value + "'");
}

// "el/az el/az ..."
std::vector<ViewAngle> parse_views(const std::string& key, const std::string& value) {
  std::vector<ViewAngle> out;
  std::istringstream in(value);
  std::string token;
  while (in >> token) {
    const auto slash = token.find('/');
    if (slash == std::string::npos) throw std::invalid_argument("config key '" + key + "': expected elevation/azimuth pairs");
    out.push_back({parse_number<double>(key, token.substr(0, slash)), parse_number<double>(key, token.substr(slash + 1))});
  }
  return out;
}

std::string format_views(const std::vector<ViewAngle>& views) {
  std::string out;
  for (const ViewAngle& v : views) {
    if (!out.empty()) out += ' ';
    out += format_double(v.elevation) + "/" + format_double(v.azimuth);
  }
  return out;
}

struct Field {
  std::function<void(JobConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const JobConfig&)> get;
  std::function<nlohmann::ordered_json(const JobConfig&)> json;
};

template <typename T>
Field number_field(T JobConfig::*member) {
  return {[member](JobConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [member](const JobConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          },
          [member](const JobConfig& c) { return nlohmann::ordered_json(c.*member); }};
}

Field string_field(std::string JobConfig::*member) {
  return {[member](JobConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const JobConfig& c) { return c.*member; },
          [member](const JobConfig& c) { return nlohmann::ordered_json(c.*member); }};
}

Field bool_field(bool JobConfig::*member) {
  return {[member](JobConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
          [member](const JobConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [member](const JobConfig& c) { return nlohmann::ordered_json(c.*member); }};
}

Field views_field(std::vector<ViewAngle> JobConfig::*member) {
  return {[member](JobConfig& c, const std::string& k, const std::string& v) { c.*member = parse_views(k, v); },
          [member](const JobConfig& c) { return format_views(c.*member); },
          [member](const JobConfig& c) {
            nlohmann::ordered_json out = nlohmann::ordered_json::array();
            for (const ViewAngle& v : c.*member) out.push_back({v.elevation, v.azimuth});
            return out;
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"mesh", string_field(&JobConfig::mesh_path)},
      {"prompt", string_field(&JobConfig::prompt)},
      {"seed", number_field(&JobConfig::seed)},
      {"steps", number_field(&JobConfig::steps)},
      {"cfg_scale", number_field(&JobConfig::cfg_scale)},
      {"image_size", number_field(&JobConfig::image_size)},
      {"latent_factor", number_field(&JobConfig::latent_factor)},
      {"texture_size", number_field(&JobConfig::texture_size)},
      {"latent_texture_size", number_field(&JobConfig::latent_texture_size)},
      {"tau", number_field(&JobConfig::tau)},
      {"c_min", number_field(&JobConfig::c_min)},
      {"c_max", number_field(&JobConfig::c_max)},
      {"blur_sigma", number_field(&JobConfig::blur_sigma)},
      {"strength", number_field(&JobConfig::strength)},
      {"camera_distance", number_field(&JobConfig::camera_distance)},
      {"fov", number_field(&JobConfig::fov)},
      {"style_consistency", bool_field(&JobConfig::style_consistency)},
      {"sampling_views", views_field(&JobConfig::sampling_views)},
      {"inpainting_views", views_field(&JobConfig::inpainting_views)},
      {"img2img_views", views_field(&JobConfig::img2img_views)},
      {"backend", string_field(&JobConfig::backend)},
      {"mock_target", string_field(&JobConfig::mock_target)},
      {"output_dir", string_field(&JobConfig::output_dir)},
      {"debug_steps", bool_field(&JobConfig::debug_steps)},
  };
  return table;
}

}  // namespace

JobConfig parse_config(const std::string& text, JobConfig base) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw std::invalid_argument("config line " + std::to_string(number) + ": unknown key '" + key + "'");
    it->second.set(base, key, value);
  }
  return base;
}

JobConfig load_config(const std::filesystem::path& path, JobConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const JobConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

std::vector<Grid> export_canonical_renders(const Grid& texture, const Mesh& mesh, const JobConfig& config) {
  std::vector<ViewAngle> angles;
  for (const CanonicalView& v : canonical_views()) angles.push_back(v.angle);
  std::vector<Grid> out;
  for (const Camera& camera : config.cameras(angles)) {
    const ViewBuffers buffers = rasterize_view(mesh, camera);
    Grid image = render(texture, mesh, buffers);
    for (std::size_t k = 0; k < buffers.foreground.size(); ++k) {
      if (buffers.foreground[k]) continue;
      for (int c = 0; c < image.channels(); ++c) image.plane(c)[k] = 1.0f;
    }
    out.push_back(std::move(image));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string view_name(std::size_t index) {
  std::string s = std::to_string(index);
  return std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

}  // namespace

JobOutcome run_job(const JobConfig& config) {
  JobOutcome outcome;
  const auto start = Clock::now();
  config.validate();
  if (config.mesh_path.empty() || !std::filesystem::is_regular_file(config.mesh_path)) {
    outcome.exit_code = 2;
    outcome.status = "failed";
    outcome.failed_stage = "load";
    outcome.error = "mesh file not found: " + config.mesh_path;
    return outcome;
  }

  const std::filesystem::path out_dir(config.output_dir);
  std::filesystem::create_directories(out_dir / "views");
  std::filesystem::create_directories(out_dir / "canonical");
  std::filesystem::create_directories(out_dir / "debug");

  std::vector<std::string> warnings;
  std::mutex warnings_mutex;
  const WarningHandler previous = set_warning_handler([&](std::string_view msg) {
    std::lock_guard lock(warnings_mutex);
    warnings.emplace_back(msg);
  });

  nlohmann::ordered_json timings = nlohmann::ordered_json::object();
  nlohmann::ordered_json manifest;
  manifest["seed"] = config.seed;
  nlohmann::ordered_json config_echo = nlohmann::ordered_json::object();
  for (const auto& [key, field] : fields()) config_echo[key] = field.json(config);
  manifest["config"] = config_echo;

  Mesh mesh;
  std::unique_ptr<NoisePredictor> predictor;
  Schedule schedule;
  std::vector<ViewState> states;
  MergeResult merged;
  Grid texture;
  std::vector<std::uint8_t> blank;
  std::size_t blank_before = 0;
  std::size_t blank_after = 0;
  Rng rng(config.seed);
  SamplerSettings sampler;
  sampler.image_size = config.image_size;
  sampler.latent_texture_size = config.latent_texture_size;
  sampler.tau = config.tau;
  sampler.cfg_scale = config.cfg_scale;
  sampler.style_consistency = config.style_consistency;
  sampler.prompt = config.prompt;
  sampler.seed = config.seed;
  RefineSettings refine;
  refine.image_size = config.image_size;
  refine.blur_sigma = config.blur_sigma;
  refine.inpaint_iterations = static_cast<int>(config.inpainting_views.size());
  refine.strength = config.strength;
  refine.prompt = config.prompt;
  refine.cfg_scale = config.cfg_scale;
  refine.seed = config.seed;
  nlohmann::ordered_json refine_info = nlohmann::ordered_json::object();

  const std::vector<std::pair<std::string, std::function<void()>>> stages = {
      {"load",
       [&] {
         mesh = normalize_mesh(load_mesh(config.mesh_path));
         const auto alpha_bar = scaled_linear_alpha_bar();
         schedule = build_schedule(config.steps, alpha_bar);
         predictor = make_predictor(config.binding(), alpha_bar, config.steps);
       }},
      {"init", [&] { states = init_states(mesh, config.cameras(config.sampling_views), sampler, rng); }},
      {"denoise",
       [&] {
         StepObserver observer;
         if (config.debug_steps) {
           observer = [&](const StepRecord& r) {
             for (std::size_t n = 0; n < r.states.size(); ++n) {
               write_gtex(out_dir / "debug" / ("step" + view_name(static_cast<std::size_t>(r.step)) + "_view" + view_name(n) + ".gtex"),
                          r.states[n].latent_texture);
             }
           };
         }
         const auto alignment = AlignmentSchedule::raised_cosine(config.steps, config.c_min, config.c_max);
         denoise(states, mesh, schedule, alignment, *predictor, sampler, rng, observer);
         for (std::size_t n = 0; n < states.size(); ++n) {
           write_gtex(out_dir / "debug" / ("latent_texture_view" + view_name(n) + ".gtex"), states[n].latent_texture);
           write_gtex(out_dir / "debug" / ("z0_view" + view_name(n) + ".gtex"), states[n].z0_hat);
         }
       }},
      {"decode",
       [&] {
         merged = decode_and_merge(states, *predictor, mesh, config.texture_size, sampler);
         texture = merged.texture;
         blank = merged.blank;
         blank_before = merged.blank_count();
         blank_after = blank_before;
         write_gtex(out_dir / "debug" / "sampled_texture.gtex", texture);
       }},
      {"inpaint",
       [&] {
         const auto views = config.cameras(config.inpainting_views);
         const Camera reference = config.cameras(config.sampling_views).front();
         InpaintResult r = inpaint_epoch(texture, blank, mesh, views, reference, *predictor, refine);
         texture = std::move(r.texture);
         blank = std::move(r.blank);
         blank_after = r.blank_history.back();
         refine_info["inpaint_selected_views"] = r.selected_views;
         refine_info["inpaint_blank_history"] = r.blank_history;
         refine_info["inpaint_aborted"] = r.aborted;
       }},
      {"img2img",
       [&] {
         Img2ImgResult r = img2img_epoch(texture, mesh, config.cameras(config.img2img_views), *predictor, schedule, refine, rng);
         texture = std::move(r.texture);
         refine_info["img2img_aborted"] = r.aborted;
       }},
      {"export",
       [&] {
         write_png(out_dir / "texture.png", texture);
         const auto cameras = config.cameras(config.sampling_views);
         for (std::size_t n = 0; n < cameras.size(); ++n) {
           const ViewBuffers buffers = rasterize_view(mesh, cameras[n]);
           write_png(out_dir / "views" / ("view" + view_name(n) + ".png"), render(texture, mesh, buffers));
         }
         const auto renders = export_canonical_renders(texture, mesh, config);
         const auto names = canonical_views();
         for (std::size_t n = 0; n < renders.size(); ++n) {
           write_png(out_dir / "canonical" / (names[n].name + ".png"), renders[n]);
         }
       }},
  };

  outcome.status = "ok";
  for (const auto& [name, run] : stages) {
    const auto t0 = Clock::now();
    try {
      run();
    } catch (const std::exception& e) {
      outcome.exit_code = 1;
      outcome.status = "failed";
      outcome.failed_stage = name;
      outcome.error = e.what();
    }
    timings[name] = std::chrono::duration<double>(Clock::now() - t0).count();
    if (outcome.exit_code != 0) break;
  }
  set_warning_handler(previous);

  manifest["status"] = outcome.status;
  manifest["failed_stage"] = outcome.failed_stage.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(outcome.failed_stage);
  if (!outcome.error.empty()) manifest["error"] = outcome.error;
  manifest["blank_before"] = blank_before;
  manifest["blank_after"] = blank_after;
  manifest["refine"] = refine_info;
  manifest["timings"] = timings;
  manifest["warnings"] = warnings;
  manifest["total_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
  for (const std::string& w : warnings) previous(w);
  return outcome;
}

}  // namespace gtex
