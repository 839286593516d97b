#include "sondeharm/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sondeharm/error.hpp"

namespace sondeharm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log t(q) where t = (1 + xi z)^(-1/xi) (Gumbel: exp(-z)); +inf marks q
// outside the support on the side where the cdf is 0, -inf where it is 1.
double log_t(double q, double mu, const GevParams& g) {
  const double z = (q - mu) / g.sigma;
  if (std::abs(g.xi) < kGumbelSwitch) return -z;
  const double a = 1.0 + g.xi * z;
  if (a <= 0.0) return g.xi > 0.0 ? kInf : -kInf;
  return -std::log1p(g.xi * z) / g.xi;
}

}  // namespace

void validate(const GevParams& params, double xi_bound) {
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma))
    throw Error(ErrorCode::InvalidParams, "GEV scale must be positive, got " + std::to_string(params.sigma));
  if (!std::isfinite(params.xi) || std::abs(params.xi) > xi_bound)
    throw Error(ErrorCode::InvalidParams, "GEV shape out of bounds: " + std::to_string(params.xi));
}

double gev_pdf(double q, double mu, const GevParams& params) {
  if (!(params.sigma > 0.0)) throw Error(ErrorCode::InvalidParams, "GEV scale must be positive");
  const double lt = log_t(q, mu, params);
  if (!std::isfinite(lt)) return 0.0;
  const double t = std::exp(lt);
  return std::exp((params.xi + 1.0) * lt - t) / params.sigma;
}

double gev_cdf(double q, double mu, const GevParams& params) {
  const double lt = log_t(q, mu, params);
  if (lt == kInf) return 0.0;
  if (lt == -kInf) return 1.0;
  return std::exp(-std::exp(lt));
}

double gev_survival(double q, double mu, const GevParams& params) {
  const double lt = log_t(q, mu, params);
  if (lt == kInf) return 1.0;
  if (lt == -kInf) return 0.0;
  return -std::expm1(-std::exp(lt));
}

double gev_quantile(double u, double mu, const GevParams& params) {
  if (!(u > 0.0 && u < 1.0)) throw Error(ErrorCode::InvalidParams, "quantile level outside (0, 1)");
  const double lt = std::log(-std::log(u));
  if (std::abs(params.xi) < kGumbelSwitch) return mu - params.sigma * lt;
  return mu + params.sigma * std::expm1(-params.xi * lt) / params.xi;
}

double gev_mode(double mu, const GevParams& params) {
  if (std::abs(params.xi) < kGumbelSwitch) return mu;
  if (params.xi <= -1.0) return gev_support(mu, params).second;
  return mu + params.sigma * std::expm1(-params.xi * std::log1p(params.xi)) / params.xi;
}

std::pair<double, double> gev_support(double mu, const GevParams& params) {
  if (std::abs(params.xi) < kGumbelSwitch) return {-kInf, kInf};
  const double end = mu - params.sigma / params.xi;
  if (params.xi > 0.0) return {end, kInf};
  return {-kInf, end};
}

double gev_mass(double p, const GevParams& params, const PressureRange& range) {
  validate(params, kInf);
  if (!(range.bottom > range.top))
    throw Error(ErrorCode::InvalidParams, "kernel range is degenerate");
  const double f_top = gev_cdf(range.top, p, params);
  if (f_top < 0.5) return gev_cdf(range.bottom, p, params) - f_top;
  return gev_survival(range.top, p, params) - gev_survival(range.bottom, p, params);
}

double normalized_weight(double q, double p, const GevParams& params, const PressureRange& range) {
  const double mass = gev_mass(p, params, range);
  if (!(mass > kMinKernelMass))
    throw Error(ErrorCode::ZeroMass, "kernel at " + std::to_string(p) + " hPa has no mass in range");
  if (!range.contains(q)) return 0.0;
  return gev_pdf(q, p, params) / mass;
}

double KernelRule::weight_sum() const noexcept {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

KernelRule make_kernel_rule(double p, const GevParams& params, const PressureRange& range,
                            std::span<const double> breakpoints, const QuadratureOptions& opts) {
  KernelRule rule;
  rule.level = p;
  rule.params = params;
  rule.range = range;
  rule.mass = gev_mass(p, params, range);
  if (!(rule.mass > kMinKernelMass))
    throw Error(ErrorCode::ZeroMass, "kernel at " + std::to_string(p) + " hPa has no mass in range");

  std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
  cuts.push_back(p);
  cuts.push_back(gev_mode(p, params));
  const auto [lo, hi] = gev_support(p, params);
  cuts.push_back(lo);
  cuts.push_back(hi);
  for (double u : {1e-12, 1e-6, 1e-3, 0.02, 0.1, 0.25, 0.5, 0.75, 0.9, 0.98, 0.999, 1.0 - 1e-6})
    cuts.push_back(gev_quantile(u, p, params));

  auto pdf = [&](double q) { return gev_pdf(q, p, params); };
  QuadratureOptions scaled = opts;
  scaled.abs_tol = opts.abs_tol * rule.mass;
  const AdaptiveRule ar = adaptive_rule(pdf, range.top, range.bottom, cuts, scaled);
  rule.panels = ar.panels;
  rule.nodes = ar.nodes;
  rule.weights.resize(ar.weights.size());
  for (std::size_t i = 0; i < ar.nodes.size(); ++i)
    rule.weights[i] = ar.weights[i] * gev_pdf(ar.nodes[i], p, params) / rule.mass;
  return rule;
}

PressureRange kernel_range(const SplineFit& fit, const PressureRange& range) {
  PressureRange r{std::min(range.bottom, fit.p_max()), std::max(range.top, fit.p_min())};
  if (!(r.bottom > r.top))
    throw Error(ErrorCode::OutOfDomain, "spline domain does not overlap the kernel range");
  return r;
}

double convolve(const SplineFit& fit, const KernelRule& rule) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    if (rule.weights[i] != 0.0) s += rule.weights[i] * fit.evaluate(rule.nodes[i]);
  return s;
}

double convolve(const SplineFit& fit, double p, const GevParams& params,
                const PressureRange& range) {
  const std::vector<double> knots = fit.knot_pressures();
  return convolve(fit, make_kernel_rule(p, params, kernel_range(fit, range), knots));
}

double convolve(const std::function<double(double)>& g, const KernelRule& rule) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    if (rule.weights[i] != 0.0) s += rule.weights[i] * g(rule.nodes[i]);
  return s;
}

std::vector<double> kernel_row(const SplineFit& fit, const KernelRule& rule) {
  std::vector<double> row(fit.basis_size(), 0.0);
  std::vector<double> b(fit.basis_size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    if (rule.weights[i] == 0.0) continue;
    fit.basis_into(rule.nodes[i], b);
    for (std::size_t j = 0; j < b.size(); ++j) row[j] += rule.weights[i] * b[j];
  }
  return row;
}

std::vector<double> kernel_row(const SplineFit& fit, double p, const GevParams& params,
                               const PressureRange& range) {
  const std::vector<double> knots = fit.knot_pressures();
  return kernel_row(fit, make_kernel_rule(p, params, kernel_range(fit, range), knots));
}

void validate(const KernelProfile& kernels, double xi_bound) {
  if (kernels.params.size() != kernels.iasi_grid.size())
    throw Error(ErrorCode::InvalidParams, "kernel profile length differs from the IASI grid");
  for (const GevParams& g : kernels.params) validate(g, xi_bound);
}

}  // namespace sondeharm
