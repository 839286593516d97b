#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "sondeharm/calibration.hpp"
#include "sondeharm/core.hpp"
#include "sondeharm/kernel.hpp"
#include "sondeharm/optimize.hpp"
#include "sondeharm/splines.hpp"

namespace sondeharm {

enum class IterationDirection { TopDown, BottomUp };
std::string_view to_string(IterationDirection d) noexcept;
IterationDirection parse_iteration_direction(std::string_view text);

/// Scale of the per-level data misfit used by the sequential estimator.
///  Likelihood: sum_k r_k^2 / u_I,k^2 (IASI error variances; unit variances
///    when any IASI uncertainty at the level is zero).
///  NormalizedWeights: sum_k r_k^2 alpha_I,k^power with normalized alpha.
enum class MisfitScale { Likelihood, NormalizedWeights };
std::string_view to_string(MisfitScale s) noexcept;
MisfitScale parse_misfit_scale(std::string_view text);

struct HarmonizeOptions {
  int restarts = 100;
  std::uint64_t seed = 1;
  IterationDirection direction = IterationDirection::TopDown;
  double iasi_weight_power = 2.0;
  MisfitScale misfit_scale = MisfitScale::Likelihood;
  double xi_bound = kDefaultXiBound;
  double init_sigma_lo = 1.0;  // hPa, log-uniform restart draws
  double init_sigma_hi = 200.0;
  double init_xi_bound = 1.0;  // uniform restart draws in [-b, b]
  double sigma_zeta_floor = 1e-8;
  int border_levels = 3;
  NelderMeadOptions simplex;
  /// Composite Gauss-Legendre panel width of the tabulated convolution:
  /// min(panel_hpa, panel_rel * q).
  double panel_hpa = 1.0;
  double panel_rel = 0.01;
};

/// Everything the level objectives need: IASI data and weights per level and
/// the bias-adjusted RAOB splines tabulated on a fixed quadrature grid.
class HarmonizationProblem {
 public:
  HarmonizationProblem(const ColocationSet& set, const std::vector<SplineFit>& fits,
                       const BiasProfile& bias, HarmonizeOptions options = {});

  std::size_t levels() const noexcept { return grid_.size(); }
  std::size_t pairs() const noexcept { return k_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const HarmonizeOptions& options() const noexcept { return options_; }
  const PressureRange& range() const noexcept { return range_; }

  /// s~_k(p_j; theta) = integral of (s_k - Delta) w for every pair, from the
  /// tabulated rule. Returns false when the kernel has no mass in range.
  bool smoothed(std::size_t j, const GevParams& theta, std::span<double> out) const;

  /// Data misfit at level j in the configured scale; +inf when infeasible.
  double misfit(std::size_t j, const GevParams& theta) const;
  /// sum_k alpha_I,k^power (x_I,k - s~_k)^2 from the tabulated rule.
  double weighted_sse(std::size_t j, const GevParams& theta, double power) const;
  /// Same quantity with per-pair adaptive Gauss-Kronrod rules.
  double level_objective(std::size_t j, const GevParams& theta, double power) const;

  double iasi_value(std::size_t k, std::size_t j) const { return x_[j * k_ + k]; }
  double iasi_alpha(std::size_t k, std::size_t j) const { return alpha_[j * k_ + k]; }

 private:
  struct Window {
    std::size_t lo = 0;
    std::size_t hi = 0;  // exclusive
  };
  bool kernel_weights(std::size_t j, const GevParams& theta, Window& win,
                      std::vector<double>& w, std::vector<double>& cum) const;

  const ColocationSet& set_;
  const std::vector<SplineFit>& fits_;
  const BiasProfile& bias_;
  HarmonizeOptions options_;
  PressureRange range_;
  std::vector<double> grid_;
  std::size_t k_ = 0;
  std::vector<double> x_;        // M x K IASI values
  std::vector<double> alpha_;    // M x K normalized IASI weights
  std::vector<double> inv_var_;  // M x K likelihood weights
  std::vector<double> nodes_;    // ascending pressure
  std::vector<double> node_w_;
  std::vector<double> table_;    // K x nodes, s_k(q) - Delta(q)
  std::vector<Window> span_;     // nodes inside each fit domain
};

/// Unpenalized multi-start minimization at grid index j.
struct FirstLevelResult {
  GevParams params;
  double misfit = 0.0;
  int restarts_used = 0;
  int best_restart = -1;
};
FirstLevelResult fit_first_level(const HarmonizationProblem& problem, std::size_t j);

struct LevelStep {
  GevParams params;
  double misfit = 0.0;
  double penalty = 0.0;
  double objective() const noexcept { return misfit + penalty; }
};

/// theta_j = theta_prev + argmin_zeta (zeta' Sigma^-1 zeta + misfit), zeta
/// starting at 0, on (sigma, xi). Penalty disabled when sigma_zeta is null.
LevelStep fit_level_j(const HarmonizationProblem& problem, std::size_t j, const GevParams& prev,
                      const std::array<double, 2>* sigma_zeta);

double step_penalty(const GevParams& prev, const GevParams& next, const std::array<double, 2>& sigma_zeta);

/// Level indices in estimation order.
std::vector<std::size_t> level_order(std::size_t m, IterationDirection direction);

/// Mean squared successive difference per component, floored.
std::array<double, 2> sigma_zeta_from_path(std::span<const GevParams> path, double floor = 1e-8);

struct SigmaZetaEstimate {
  std::array<double, 2> sigma_zeta = {0.0, 0.0};
  std::vector<GevParams> path;  // in estimation order
  bool degenerate = false;      // every difference was zero
};
SigmaZetaEstimate estimate_sigma_zeta(const HarmonizationProblem& problem, const GevParams& first);

struct HarmonizationResult {
  KernelProfile kernels;
  IterationDirection direction = IterationDirection::TopDown;
  std::vector<double> misfit_per_level;     // grid order
  std::vector<double> penalty_per_level;    // grid order, 0 at the first level
  std::vector<double> objective_per_level;  // misfit + penalty
  std::vector<double> weighted_sse_per_level;  // alpha^power form
  std::vector<bool> border;
  int restarts_used = 0;
  std::vector<GevParams> unpenalized_path;  // grid order
  std::vector<std::vector<double>> smoothed_profiles;  // K x M
};

HarmonizationResult harmonize(const HarmonizationProblem& problem);
HarmonizationResult harmonize(const ColocationSet& set, const std::vector<SplineFit>& fits,
                              const BiasProfile& bias, const HarmonizeOptions& options = {});

/// Profile -2 log-likelihood (constants dropped): sum of level misfits plus
/// the random-walk penalties along the estimation order.
double profile_neg2_loglik(const HarmonizationProblem& problem, const KernelProfile& kernels,
                           IterationDirection direction);

}  // namespace sondeharm
