#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "sondeharm/core.hpp"

namespace sondeharm {

enum class SplineKind { LinearB, CubicB, HermiteInterp };

std::string_view to_string(SplineKind kind) noexcept;
SplineKind parse_spline_kind(std::string_view text);

inline constexpr double kLambdaMin = 1e-12;
inline constexpr double kLambdaMax = 1e12;

/// Continuous profile s(p) = B(p)' gamma with one knot per observation.
///
/// Knots live in x = log(p) and are stored in ascending order, i.e. from the
/// top of the profile down to the ground (the reverse of Profile ordering).
///
/// Coefficients by kind:
///  - LinearB: values at the knots (hat basis).
///  - CubicB: values at the knots in the cardinal basis of natural cubic
///    splines; second derivatives are a fixed linear map of them.
///  - HermiteInterp: values at the knots followed by slopes ds/dx.
class SplineFit {
 public:
  SplineFit(SplineKind kind, std::vector<double> log_knots, std::vector<double> coefficients,
            double lambda = 0.0, double tau = 0.0);

  SplineKind kind() const noexcept { return kind_; }
  std::span<const double> log_knots() const noexcept { return x_; }
  std::vector<double> knot_pressures() const;
  std::span<const double> coefficients() const noexcept { return gamma_; }
  std::size_t basis_size() const noexcept { return gamma_.size(); }
  double lambda() const noexcept { return lambda_; }
  double tau() const noexcept { return tau_; }
  void set_tau(double tau) noexcept { tau_ = tau; }

  double p_min() const noexcept;
  double p_max() const noexcept;
  bool in_domain(double p) const noexcept;

  /// Throws OutOfDomain outside [p_min, p_max].
  double evaluate(double p) const;
  std::vector<double> evaluate(std::span<const double> pressures) const;

  /// Value of every basis function at p, so evaluate(p) == basis(p) . gamma.
  std::vector<double> basis(double p) const;
  void basis_into(double p, std::span<double> out) const;

  /// Second derivative in log-pressure at each knot (LinearB: second divided
  /// differences, zero at the end knots).
  std::vector<double> knot_second_derivatives() const;

  /// Same knots and basis, different coefficients.
  SplineFit with_coefficients(std::vector<double> coefficients) const;

 private:
  std::size_t interval(double x) const noexcept;

  SplineKind kind_;
  std::vector<double> x_;
  std::vector<double> gamma_;
  std::vector<double> curvature_map_;  // CubicB: row-major N x N map gamma -> s''
  std::vector<double> second_;         // CubicB: cached s'' at knots
  double lambda_;
  double tau_;
};

/// Ascending log-pressure knots and the matching data/weights (reversed
/// from profile order).
struct KnotData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> w;
};
KnotData knot_data(const Profile& profile, std::span<const double> profile_weights);

/// Rows of the discrete curvature operator D (N x N, row-major) so that
/// (D gamma)_j is the penalized second derivative at knot j.
std::vector<double> curvature_operator(SplineKind kind, std::span<const double> log_knots);

/// Penalized weighted least squares:
///   sum_j w_j (x_j - s(p_j))^2 + lambda sum_j w_j s''(p_j)^2
/// `weights` is aligned with the profile levels (ground to top).
SplineFit fit_penalized(const Profile& profile, SplineKind kind, double lambda,
                        std::span<const double> weights);
SplineFit fit_penalized(const Profile& profile, SplineKind kind, double lambda,
                        const WeightScheme& weights);

/// Monotone piecewise cubic Hermite interpolant (Fritsch-Carlson limiter).
SplineFit fit_hermite(const Profile& profile);

/// (1/N) sum_j w_j (x_j - s(p_j))^2 at the data points.
double tolerance_criterion(const SplineFit& fit, const Profile& profile,
                           std::span<const double> weights);

/// Largest lambda whose fit satisfies the tolerance criterion <= tau^2, found
/// by bisection on log(lambda) over [1e-12, 1e12] down to a bracket 1e-8
/// wide. tau == 0 returns 0.
/// Throws Unreachable when tau is at or beyond the maximum-smoothing RMSE.
double lambda_for_tolerance(const Profile& profile, SplineKind kind,
                            std::span<const double> weights, double tau);

/// Fit with the smoothing implied by tau. HermiteInterp ignores tau. When
/// `clamp_unreachable` is set an unreachable tau falls back to lambda = 1e12.
SplineFit fit_for_tolerance(const Profile& profile, SplineKind kind,
                            std::span<const double> weights, double tau,
                            bool clamp_unreachable = false);

/// sqrt(sum_i w_i (x_ref,i - s(p_i))^2) over the reference levels. Uniform
/// weights (1/L) when `weights` is empty.
double weighted_rmse(const SplineFit& fit, const Profile& reference,
                     std::span<const double> weights = {});

}  // namespace sondeharm
