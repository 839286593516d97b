#include "sondeharm/pipeline.hpp"

#include <string>

#include "sondeharm/error.hpp"

namespace sondeharm {

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Calibrate: return "calibrate";
    case Stage::Fit: return "fit";
    case Stage::Harmonize: return "harmonize";
    case Stage::Budget: return "budget";
  }
  return "?";
}

std::vector<UncertaintyProfile> PipelineResult::uncertainties() const {
  std::vector<UncertaintyProfile> out;
  if (calibration) {
    out.push_back(calibration->u_total);
    out.push_back(calibration->u_processing);
    out.push_back(calibration->u_sparseness);
  }
  for (const auto* u : {&u_raw, &u_harm, &u_vsmooth})
    if (*u) out.push_back(**u);
  return out;
}

namespace {

template <class F>
auto staged(Stage stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(to_string(stage)) + " stage: " + e.message());
  }
}

CalibrationOptions calibration_options(const PipelineConfig& c) {
  CalibrationOptions o;
  o.kind = c.spline_kind;
  o.tau_scale = default_tau_scale(c.variable);
  o.mandatory_levels = c.mandatory_levels;
  o.rho = c.rho;
  return o;
}

}  // namespace

PipelineResult run_pipeline(const ColocationSet& set, const PipelineConfig& config, Stage until) {
  validate(config);
  validate_set(set);
  PipelineResult r;
  r.variable = set.variable;
  r.range = set.pressure_range;
  r.pairs = set.size();
  r.gruan_pairs = set.gruan_indices().size();
  r.spline_kind = config.spline_kind;

  if (r.gruan_pairs == 0) {
    if (!config.tau)
      throw Error(ErrorCode::ConfigError, "calibrate stage: no GRUAN co-locations, so tau must be fixed in the config");
    r.tau_used = *config.tau;
  } else {
    r.calibration = staged(Stage::Calibrate, [&] {
      const Calibrator cal(set, calibration_options(config));
      CalibrationStage cs;
      double tau = 0.0;
      if (config.tau) {
        tau = *config.tau;
      } else {
        cs.tau = cal.optimize_tau();
        tau = cs.tau->tau_hat;
      }
      const auto fits = cal.fits(tau);
      cs.bias = cal.bias(fits, tau);
      cs.u_total = cal.u_rg_total(fits, config.bias_adjusted_total ? &cs.bias : nullptr);
      cs.u_processing = u_rg_processing(cs.u_total, levels_within(config.mandatory_levels, set.pressure_range));
      cs.u_sparseness = u_sparseness(cs.u_total, cs.u_processing);
      return cs;
    });
    r.tau_used = config.tau ? *config.tau : r.calibration->tau->tau_hat;
    r.bias = r.calibration->bias;
  }
  if (until == Stage::Calibrate) return r;

  r.fits = staged(Stage::Fit, [&] { return fit_all(set, config.spline_kind, r.tau_used, config.rho); });
  if (until == Stage::Fit) return r;

  r.harmonization = staged(Stage::Harmonize, [&] {
    const HarmonizationProblem problem(set, r.fits, r.bias, harmonize_options(config));
    return harmonize(problem);
  });
  if (until == Stage::Harmonize) return r;

  staged(Stage::Budget, [&] {
    r.u_raw = u_ri_raw(set, r.fits, &r.bias, RawOptions{config.normalized_raw});
    r.u_harm = u_ri_harm(*r.harmonization, set);
    r.u_vsmooth = u_ri_vsmooth(*r.u_raw, *r.u_harm);
    return 0;
  });
  return r;
}

}  // namespace sondeharm
