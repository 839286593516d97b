#pragma once

#include <vector>

#include "sondeharm/calibration.hpp"
#include "sondeharm/core.hpp"
#include "sondeharm/harmonize.hpp"
#include "sondeharm/splines.hpp"

namespace sondeharm {

/// IASI weights of the co-locations listed in `covering` at IASI level j:
/// normalized reciprocal-squared IASI uncertainties over those pairs, uniform
/// when any of them is zero.
std::vector<double> iasi_level_alpha(const ColocationSet& set, std::size_t j,
                                     std::span<const std::size_t> covering);

struct RawOptions {
  /// Drop the explicit 1/K factor (alpha is already normalized).
  bool normalized_raw = true;
};

/// sqrt(c sum_k alpha_k (x_I,k - s_R,k)^2) per IASI level with c = 1, or 1/K
/// under the literal form, K counting the pairs whose fit covers the level.
/// The spline is bias-adjusted when `bias` is given.
UncertaintyProfile u_ri_raw(const ColocationSet& set, const std::vector<SplineFit>& fits,
                            const BiasProfile* bias = nullptr, RawOptions options = {});

/// sqrt(sum_k alpha_k (s~_k - x_I,k)^2) per IASI level from harmonized
/// profiles (K x M).
UncertaintyProfile u_ri_harm(const std::vector<std::vector<double>>& smoothed, const ColocationSet& set);
UncertaintyProfile u_ri_harm(const HarmonizationResult& result, const ColocationSet& set);

/// sqrt(max(u_raw^2 - u_harm^2, 0)); clamped levels are flagged.
UncertaintyProfile u_ri_vsmooth(const UncertaintyProfile& u_raw, const UncertaintyProfile& u_harm);

}  // namespace sondeharm
