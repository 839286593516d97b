#pragma once

#include <optional>
#include <vector>

#include "sondeharm/core.hpp"
#include "sondeharm/splines.hpp"

namespace sondeharm {

/// RAOB bias profile Delta(p) on the calibration grid.
struct BiasProfile {
  std::vector<double> grid;  // ground to top
  std::vector<double> delta;
  double tau_used = 0.0;

  /// Log-p interpolation with constant extension; zero when empty.
  double at(double p) const;
};

struct TauCalibration {
  double tau_hat = 0.0;
  std::vector<std::pair<double, double>> objective_curve;  // (tau, weighted RMSE)
  double objective_at_tau_hat = 0.0;                       // weighted RMSE at tau_hat
  SplineKind spline_kind = SplineKind::LinearB;
  bool flat_objective = false;
};

/// Natural smoothing scale of a variable: 1 K, 0.1 g/kg.
double default_tau_scale(Variable variable) noexcept;

struct CalibrationOptions {
  SplineKind kind = SplineKind::LinearB;
  double tau_scale = 1.0;
  int tau_points = 40;
  double tau_lo = 1e-3;  // times tau_scale
  double tau_hi = 10.0;  // times tau_scale
  double golden_rel_tol = 1e-4;
  int grid_points = 400;
  std::vector<double> mandatory_levels = wmo_mandatory_levels();
  double rho = 1.0;
};

/// Within-profile RAOB weights for pair k, aligned with its levels and
/// rescaled to mean 1. Pairs with a GRUAN profile use reciprocal-squared
/// GRUAN uncertainties normalized across all GRUAN pairs at each level
/// (RAOB variance = rho times GRUAN variance). Other pairs use their own
/// RAOB uncertainties when all are positive, uniform weights otherwise.
std::vector<double> raob_weights(const ColocationSet& set, std::size_t k, double rho = 1.0);

/// Spline fit of every pair's RAOB at tolerance tau (unreachable tolerances
/// fall back to maximum smoothing).
std::vector<SplineFit> fit_all(const ColocationSet& set, SplineKind kind, double tau,
                               double rho = 1.0);

/// Precomputed GRUAN side of the calibration: grid, aligned GRUAN values and
/// uncertainties, and RAOB weights of the GRUAN pairs.
class Calibrator {
 public:
  Calibrator(const ColocationSet& set, CalibrationOptions options = {});

  const std::vector<double>& grid() const noexcept { return grid_; }
  const CalibrationOptions& options() const noexcept { return options_; }
  std::size_t gruan_pairs() const noexcept { return pairs_.size(); }
  const std::vector<std::size_t>& pair_indices() const noexcept { return pairs_; }

  /// RAOB fits of the GRUAN pairs at tau.
  std::vector<SplineFit> fits(double tau) const;
  std::vector<SplineFit> fits(double tau, SplineKind kind) const;

  BiasProfile bias(const std::vector<SplineFit>& fits, double tau) const;
  /// Sum over levels and pairs of alpha_G (x_G - (s_R - Delta))^2.
  double objective(const std::vector<SplineFit>& fits, const BiasProfile& bias) const;
  /// sqrt(objective / number of covered levels).
  double weighted_rmse(const std::vector<SplineFit>& fits, const BiasProfile& bias) const;
  double rmse_at(double tau, SplineKind kind) const;

  TauCalibration optimize_tau() const;
  TauCalibration optimize_tau(SplineKind kind) const;

  /// sqrt(sum_k alpha_G (x_G - s_R)^2) per grid level, or with the bias
  /// removed from s_R when `bias_adjusted` is set.
  UncertaintyProfile u_rg_total(const std::vector<SplineFit>& fits, const BiasProfile* bias = nullptr) const;

 private:
  struct LevelTerm {
    std::size_t pair;  // index into pairs_
    double x_gruan;
    double alpha;
  };

  const ColocationSet& set_;
  CalibrationOptions options_;
  std::vector<std::size_t> pairs_;
  std::vector<std::vector<double>> weights_;  // RAOB weights per GRUAN pair
  std::vector<double> grid_;
  std::vector<std::vector<LevelTerm>> terms_;  // per grid level
};

BiasProfile estimate_bias(const ColocationSet& set, double tau, const CalibrationOptions& options = {});
TauCalibration optimize_tau(const ColocationSet& set, const CalibrationOptions& options = {});
UncertaintyProfile u_rg_total(const ColocationSet& set, double tau_hat, bool bias_adjusted = false,
                              const CalibrationOptions& options = {});

/// u_tot at the mandatory levels, log-p linear between them, held constant
/// beyond the outermost ones, clamped to <= u_tot.
UncertaintyProfile u_rg_processing(const UncertaintyProfile& u_tot,
                                   std::span<const double> mandatory_levels);

/// sqrt(max(u_tot^2 - u_proc^2, 0)); clamped levels are flagged.
UncertaintyProfile u_sparseness(const UncertaintyProfile& u_tot, const UncertaintyProfile& u_proc);

}  // namespace sondeharm
