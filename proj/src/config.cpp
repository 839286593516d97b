#include "sondeharm/config.hpp"

#include <fstream>
#include <set>

#include "sondeharm/error.hpp"

namespace sondeharm {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::ConfigError, message); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("invalid value for '") + key + "': " + e.what());
  }
}

std::string read_string(const json& j, const char* key, const std::string& fallback) {
  std::string s = fallback;
  read(j, key, s);
  return s;
}

template <class Parse, class T>
void read_enum(const json& j, const char* key, T& out, Parse parse) {
  if (!j.contains(key)) return;
  const std::string s = read_string(j, key, "");
  try {
    out = parse(s);
  } catch (const Error& e) {
    config_error(e.what());
  }
}

void read_synth(const json& j, SynthSettings& s) {
  check_keys(j,
             {"pairs", "gruan_pairs", "family", "kinks", "noise_sd_raob", "noise_sd_gruan", "iasi_noise_sd",
              "raob_bias", "uncertainty_floor", "iasi_levels", "iasi_bottom", "iasi_top", "kernel",
              "curvature_threshold", "max_significant_levels", "gruan_levels"},
             "synth");
  read(j, "pairs", s.pairs);
  read(j, "gruan_pairs", s.gruan_pairs);
  read_enum(j, "family", s.family, parse_truth_family);
  read(j, "kinks", s.kinks);
  read(j, "noise_sd_raob", s.noise_sd_raob);
  read(j, "noise_sd_gruan", s.noise_sd_gruan);
  read(j, "iasi_noise_sd", s.iasi_noise_sd);
  read(j, "raob_bias", s.raob_bias);
  read(j, "uncertainty_floor", s.uncertainty_floor);
  read(j, "iasi_levels", s.iasi_levels);
  read(j, "iasi_bottom", s.iasi_bottom);
  read(j, "iasi_top", s.iasi_top);
  read(j, "curvature_threshold", s.curvature_threshold);
  read(j, "max_significant_levels", s.max_significant_levels);
  read(j, "gruan_levels", s.gruan_levels);
  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    check_keys(k, {"sigma_top", "sigma_bottom", "xi_top", "xi_bottom"}, "synth.kernel");
    read(k, "sigma_top", s.sigma_top);
    read(k, "sigma_bottom", s.sigma_bottom);
    read(k, "xi_top", s.xi_top);
    read(k, "xi_bottom", s.xi_bottom);
  }
}

}  // namespace

PipelineConfig default_pipeline_config(Variable variable) {
  PipelineConfig c;
  c.variable = variable;
  c.pressure_range = default_pressure_range(variable);
  c.min_raob_levels = default_min_raob_levels(variable);
  if (variable == Variable::Wvmr) {
    SynthSettings& s = c.synth;
    s.family = TruthFamily::PiecewiseLinearKinks;
    s.kinks = 10;
    s.noise_sd_raob = 0.05;
    s.noise_sd_gruan = 0.02;
    s.iasi_noise_sd = 0.03;
    s.iasi_top = 301.0;
    s.sigma_bottom = 60.0;
    s.xi_top = 0.2;
    s.xi_bottom = -0.2;
    s.curvature_threshold = 5.0;
  }
  return c;
}

PipelineConfig parse_config(const json& j) {
  check_keys(j,
             {"variable", "pressure_range", "min_raob_levels", "spline_kind", "tau", "rho", "mandatory_levels",
              "restarts", "iteration_direction", "iasi_weight_power", "misfit_scale", "normalized_raw",
              "bias_adjusted_total", "seed", "paths", "synth"},
             "config");
  Variable variable = Variable::Temperature;
  read_enum(j, "variable", variable, parse_variable);
  PipelineConfig c = default_pipeline_config(variable);

  if (j.contains("pressure_range")) {
    std::vector<double> r;
    read(j, "pressure_range", r);
    if (r.size() != 2) config_error("pressure_range must be [bottom, top]");
    c.pressure_range = {r[0], r[1]};
  }
  read(j, "min_raob_levels", c.min_raob_levels);
  read_enum(j, "spline_kind", c.spline_kind, parse_spline_kind);
  if (j.contains("tau")) {
    const json& t = j.at("tau");
    if (t.is_string()) {
      if (t.get<std::string>() != "calibrate") config_error("tau must be a number or \"calibrate\"");
      c.tau.reset();
    } else if (t.is_number()) {
      c.tau = t.get<double>();
    } else {
      config_error("tau must be a number or \"calibrate\"");
    }
  }
  read(j, "rho", c.rho);
  read(j, "mandatory_levels", c.mandatory_levels);
  read(j, "restarts", c.restarts);
  read_enum(j, "iteration_direction", c.iteration_direction, parse_iteration_direction);
  read(j, "iasi_weight_power", c.iasi_weight_power);
  read_enum(j, "misfit_scale", c.misfit_scale, parse_misfit_scale);
  read(j, "normalized_raw", c.normalized_raw);
  read(j, "bias_adjusted_total", c.bias_adjusted_total);
  read(j, "seed", c.seed);
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    check_keys(p, {"input", "output"}, "paths");
    read(p, "input", c.input);
    read(p, "output", c.output);
  }
  if (j.contains("synth")) read_synth(j.at("synth"), c.synth);
  validate(c);
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    config_error("malformed config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const PipelineConfig& c) {
  json j;
  j["variable"] = std::string(to_string(c.variable));
  j["pressure_range"] = {c.pressure_range.bottom, c.pressure_range.top};
  j["min_raob_levels"] = c.min_raob_levels;
  j["spline_kind"] = std::string(to_string(c.spline_kind));
  if (c.tau)
    j["tau"] = *c.tau;
  else
    j["tau"] = "calibrate";
  j["rho"] = c.rho;
  j["mandatory_levels"] = c.mandatory_levels;
  j["restarts"] = c.restarts;
  j["iteration_direction"] = std::string(to_string(c.iteration_direction));
  j["iasi_weight_power"] = c.iasi_weight_power;
  j["misfit_scale"] = std::string(to_string(c.misfit_scale));
  j["normalized_raw"] = c.normalized_raw;
  j["bias_adjusted_total"] = c.bias_adjusted_total;
  j["seed"] = c.seed;
  j["paths"] = {{"input", c.input}, {"output", c.output}};
  const SynthSettings& s = c.synth;
  j["synth"] = {{"pairs", s.pairs},
                {"gruan_pairs", s.gruan_pairs},
                {"family", std::string(to_string(s.family))},
                {"kinks", s.kinks},
                {"noise_sd_raob", s.noise_sd_raob},
                {"noise_sd_gruan", s.noise_sd_gruan},
                {"iasi_noise_sd", s.iasi_noise_sd},
                {"raob_bias", s.raob_bias},
                {"uncertainty_floor", s.uncertainty_floor},
                {"iasi_levels", s.iasi_levels},
                {"iasi_bottom", s.iasi_bottom},
                {"iasi_top", s.iasi_top},
                {"kernel", {{"sigma_top", s.sigma_top}, {"sigma_bottom", s.sigma_bottom}, {"xi_top", s.xi_top}, {"xi_bottom", s.xi_bottom}}},
                {"curvature_threshold", s.curvature_threshold},
                {"max_significant_levels", s.max_significant_levels},
                {"gruan_levels", s.gruan_levels}};
  return j;
}

void validate(const PipelineConfig& c) {
  if (!(c.pressure_range.bottom > c.pressure_range.top && c.pressure_range.top > 0.0))
    config_error("pressure_range must satisfy bottom > top > 0");
  if (c.min_raob_levels < 2) config_error("min_raob_levels must be at least 2");
  if (c.tau && !(*c.tau >= 0.0)) config_error("tau must be non-negative");
  if (!(c.rho > 0.0)) config_error("rho must be positive");
  if (c.restarts < 1) config_error("restarts must be at least 1");
  if (!(c.iasi_weight_power >= 0.0)) config_error("iasi_weight_power must be non-negative");
  for (double m : c.mandatory_levels)
    if (!(m > 0.0)) config_error("mandatory levels must be positive pressures");
  const SynthSettings& s = c.synth;
  if (s.pairs < 1 || s.gruan_pairs < 0 || s.gruan_pairs > s.pairs) config_error("synth pair counts are inconsistent");
  if (s.iasi_levels < 3) config_error("synth.iasi_levels must be at least 3");
  if (!(s.iasi_bottom > s.iasi_top && c.pressure_range.contains(s.iasi_bottom) && c.pressure_range.contains(s.iasi_top)))
    config_error("synth IASI grid must lie inside the pressure range");
  if (!(s.sigma_top > 0.0 && s.sigma_bottom > 0.0)) config_error("synth kernel scales must be positive");
  if (s.noise_sd_raob < 0.0 || s.noise_sd_gruan < 0.0 || s.iasi_noise_sd < 0.0) config_error("noise levels must be non-negative");
  if (!(s.uncertainty_floor > 0.0)) config_error("synth.uncertainty_floor must be positive");
  if (s.gruan_levels < 2) config_error("synth.gruan_levels must be at least 2");
}

SynthConfig synth_config(const PipelineConfig& c) {
  SynthConfig s = default_synth_config(c.variable);
  const SynthSettings& in = c.synth;
  s.seed = c.seed;
  s.range = c.pressure_range;
  s.mandatory_levels = c.mandatory_levels;
  s.pairs = in.pairs;
  s.gruan_pairs = in.gruan_pairs;
  s.family = in.family;
  s.kinks = in.kinks;
  s.noise_sd_raob = in.noise_sd_raob;
  s.noise_sd_gruan = in.noise_sd_gruan;
  s.iasi_noise_sd = in.iasi_noise_sd;
  s.uncertainty_floor = in.uncertainty_floor;
  s.raob_bias.constant = in.raob_bias;
  s.curvature_threshold = in.curvature_threshold;
  s.max_significant_levels = in.max_significant_levels;
  s.gruan_levels = in.gruan_levels;
  s.kernel_truth = smooth_kernel_profile(log_uniform_grid(in.iasi_bottom, in.iasi_top, static_cast<std::size_t>(in.iasi_levels)),
                                         in.sigma_top, in.sigma_bottom, in.xi_top, in.xi_bottom);
  return s;
}

HarmonizeOptions harmonize_options(const PipelineConfig& c) {
  HarmonizeOptions o;
  o.restarts = c.restarts;
  o.seed = c.seed;
  o.direction = c.iteration_direction;
  o.iasi_weight_power = c.iasi_weight_power;
  o.misfit_scale = c.misfit_scale;
  return o;
}

}  // namespace sondeharm
