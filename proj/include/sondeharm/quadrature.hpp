#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace sondeharm {

struct GkEstimate {
  double kronrod = 0.0;
  double gauss = 0.0;
  double error() const noexcept;
};

/// 15-point Kronrod / 7-point Gauss pair on [a, b].
GkEstimate gauss_kronrod15(const std::function<double(double)>& f, double a, double b);

/// Nodes (abscissae on [a, b]) and weights of the GK15 rule.
void gauss_kronrod15_nodes(double a, double b, std::span<double, 15> nodes,
                           std::span<double, 15> weights);

/// Gauss-Legendre nodes and weights on [-1, 1] for n = 4.
const std::array<double, 4>& gauss_legendre4_nodes();
const std::array<double, 4>& gauss_legendre4_weights();

struct QuadratureOptions {
  double abs_tol = 1e-10;
  std::size_t max_panels = 2000;
  /// Panels narrower than this fraction of |midpoint| are not split again.
  double min_relative_width = 1e-12;
};

/// Composite rule produced by adaptive bisection: nodes and weights of GK15
/// on every final panel, so integrals of other integrands can reuse them.
struct AdaptiveRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double integral = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
};

/// Refines panels of [a, b] (split first at `breakpoints` that fall strictly
/// inside) until the summed |K - G| of f is <= abs_tol. Throws
/// QuadratureFailure when max_panels is exceeded.
AdaptiveRule adaptive_rule(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, const QuadratureOptions& opts = {});

}  // namespace sondeharm
