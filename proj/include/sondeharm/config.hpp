#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sondeharm/core.hpp"
#include "sondeharm/harmonize.hpp"
#include "sondeharm/splines.hpp"
#include "sondeharm/synth.hpp"

namespace sondeharm {

/// Settings of the `simulate` command.
struct SynthSettings {
  int pairs = 50;
  int gruan_pairs = 20;
  TruthFamily family = TruthFamily::TropopauseTemplate;
  int kinks = 20;
  double noise_sd_raob = 0.4;
  double noise_sd_gruan = 0.1;
  double iasi_noise_sd = 0.1;
  double raob_bias = 0.0;
  double uncertainty_floor = 0.01;
  int iasi_levels = 30;
  double iasi_bottom = 957.0;
  double iasi_top = 11.0;
  double sigma_top = 20.0;
  double sigma_bottom = 80.0;
  double xi_top = 0.25;
  double xi_bottom = -0.25;
  double curvature_threshold = 50.0;
  int max_significant_levels = 28;
  int gruan_levels = 400;
};

struct PipelineConfig {
  Variable variable = Variable::Temperature;
  PressureRange pressure_range = default_pressure_range(Variable::Temperature);
  int min_raob_levels = 20;
  SplineKind spline_kind = SplineKind::LinearB;
  std::optional<double> tau;  // empty: calibrate against GRUAN
  double rho = 1.0;
  std::vector<double> mandatory_levels = wmo_mandatory_levels();
  int restarts = 100;
  IterationDirection iteration_direction = IterationDirection::TopDown;
  double iasi_weight_power = 2.0;
  MisfitScale misfit_scale = MisfitScale::Likelihood;
  bool normalized_raw = true;
  bool bias_adjusted_total = false;
  std::uint64_t seed = 1;
  std::string input;
  std::string output = "out";
  SynthSettings synth;
};

/// Defaults of one variable (range, level threshold, synthetic settings).
PipelineConfig default_pipeline_config(Variable variable);

/// Throws ConfigError on unknown keys, wrong types or invalid values.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const PipelineConfig& config);
void validate(const PipelineConfig& config);

SynthConfig synth_config(const PipelineConfig& config);
HarmonizeOptions harmonize_options(const PipelineConfig& config);

}  // namespace sondeharm
