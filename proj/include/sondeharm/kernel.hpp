#pragma once

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "sondeharm/core.hpp"
#include "sondeharm/quadrature.hpp"
#include "sondeharm/splines.hpp"

namespace sondeharm {

inline constexpr double kDefaultXiBound = 5.0;
inline constexpr double kGumbelSwitch = 1e-8;
inline constexpr double kMinKernelMass = 1e-12;

/// GEV scale and shape; the location is the IASI level itself.
struct GevParams {
  double sigma = 1.0;  // hPa
  double xi = 0.0;

  bool operator==(const GevParams&) const = default;
};

/// Throws InvalidParams unless sigma > 0, xi finite and |xi| <= xi_bound.
void validate(const GevParams& params, double xi_bound = kDefaultXiBound);

double gev_pdf(double q, double mu, const GevParams& params);
double gev_cdf(double q, double mu, const GevParams& params);
/// 1 - cdf, accurate in the upper tail.
double gev_survival(double q, double mu, const GevParams& params);
double gev_quantile(double u, double mu, const GevParams& params);
double gev_mode(double mu, const GevParams& params);
/// Closed support [lo, hi]; infinite ends as +-infinity.
std::pair<double, double> gev_support(double mu, const GevParams& params);

/// GEV probability mass inside range (top <= q <= bottom).
double gev_mass(double p, const GevParams& params, const PressureRange& range);

/// pdf(q; mu = p) divided by the mass inside the range; zero outside it.
/// Throws ZeroMass when the mass is below 1e-12.
double normalized_weight(double q, double p, const GevParams& params, const PressureRange& range);

/// Quadrature nodes q_i and weights omega_i with sum_i omega_i g(q_i)
/// approximating the integral of g(q) w(q; theta, p) over the range.
struct KernelRule {
  double level = 0.0;
  GevParams params;
  PressureRange range;
  double mass = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t panels = 0;

  double weight_sum() const noexcept;
};

/// Adaptive GK15 rule refined on the weight function. Panels are split at
/// `breakpoints` inside the range (e.g. spline knots) plus the kernel's
/// location, mode, support end and a set of quantiles.
KernelRule make_kernel_rule(double p, const GevParams& params, const PressureRange& range,
                            std::span<const double> breakpoints = {},
                            const QuadratureOptions& opts = {});

/// Truncation range of a convolution: `range` intersected with the fit domain.
PressureRange kernel_range(const SplineFit& fit, const PressureRange& range);

double convolve(const SplineFit& fit, const KernelRule& rule);
double convolve(const SplineFit& fit, double p, const GevParams& params,
                const PressureRange& range);
double convolve(const std::function<double(double)>& g, const KernelRule& rule);

/// Integral of every basis function against the weight, so that
/// kernel_row(...) . gamma == convolve(...) up to rounding.
std::vector<double> kernel_row(const SplineFit& fit, const KernelRule& rule);
std::vector<double> kernel_row(const SplineFit& fit, double p, const GevParams& params,
                               const PressureRange& range);

/// Per-level kernel parameters on the IASI grid.
struct KernelProfile {
  std::vector<double> iasi_grid;
  std::vector<GevParams> params;
  std::array<double, 2> sigma_zeta = {0.0, 0.0};  // innovation variances of (sigma, xi)
};

void validate(const KernelProfile& kernels, double xi_bound = kDefaultXiBound);

}  // namespace sondeharm
