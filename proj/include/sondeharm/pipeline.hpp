#pragma once

#include <optional>
#include <vector>

#include "sondeharm/calibration.hpp"
#include "sondeharm/config.hpp"
#include "sondeharm/harmonize.hpp"
#include "sondeharm/uncertainty.hpp"

namespace sondeharm {

enum class Stage { Calibrate, Fit, Harmonize, Budget };
std::string_view to_string(Stage stage) noexcept;

struct CalibrationStage {
  std::optional<TauCalibration> tau;  // empty when tau is fixed in the config
  BiasProfile bias;
  UncertaintyProfile u_total;
  UncertaintyProfile u_processing;
  UncertaintyProfile u_sparseness;
};

struct PipelineResult {
  Variable variable = Variable::Temperature;
  PressureRange range;
  std::size_t pairs = 0;
  std::size_t gruan_pairs = 0;
  std::optional<CalibrationStage> calibration;  // only with GRUAN co-locations
  double tau_used = 0.0;
  SplineKind spline_kind = SplineKind::LinearB;
  std::vector<SplineFit> fits;
  BiasProfile bias;  // empty (zero) without calibration
  std::optional<HarmonizationResult> harmonization;
  std::optional<UncertaintyProfile> u_raw;
  std::optional<UncertaintyProfile> u_harm;
  std::optional<UncertaintyProfile> u_vsmooth;

  /// Every uncertainty profile computed so far, in budget order.
  std::vector<UncertaintyProfile> uncertainties() const;
};

/// Runs calibration (with GRUAN pairs), fits, harmonization and the budget up
/// to and including `until`. Errors keep their code and gain a stage tag.
/// Without GRUAN pairs tau must be fixed in the config (ConfigError).
PipelineResult run_pipeline(const ColocationSet& set, const PipelineConfig& config, Stage until = Stage::Budget);

}  // namespace sondeharm
