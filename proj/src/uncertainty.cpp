#include "sondeharm/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sondeharm/error.hpp"

namespace sondeharm {

namespace {

void check_iasi_grid(const ColocationSet& set) {
  if (set.pairs.empty()) throw Error(ErrorCode::EmptyInput, "no co-locations");
  for (const ColocationPair& pair : set.pairs)
    if (pair.iasi.size() != set.iasi_grid.size())
      throw Error(ErrorCode::GridMismatch, "IASI profile of " + pair.pair_id + " does not match the shared grid");
}

}  // namespace

std::vector<double> iasi_level_alpha(const ColocationSet& set, std::size_t j,
                                     std::span<const std::size_t> covering) {
  std::vector<double> u;
  u.reserve(covering.size());
  for (std::size_t k : covering) u.push_back(set.pairs.at(k).iasi[j].uncertainty);
  if (u.empty()) throw Error(ErrorCode::EmptyLevel, "no co-location covers IASI level " + std::to_string(j));
  return level_weights(u).values;
}

UncertaintyProfile u_ri_raw(const ColocationSet& set, const std::vector<SplineFit>& fits,
                            const BiasProfile* bias, RawOptions options) {
  check_iasi_grid(set);
  if (fits.size() != set.size()) throw Error(ErrorCode::InvalidParams, "one RAOB fit per co-location is required");
  const std::size_t m = set.iasi_grid.size();
  std::vector<double> values(m);
  std::vector<std::size_t> covering;
  for (std::size_t j = 0; j < m; ++j) {
    const double p = set.iasi_grid[j];
    covering.clear();
    for (std::size_t k = 0; k < set.size(); ++k)
      if (fits[k].in_domain(p)) covering.push_back(k);
    if (covering.empty())
      throw Error(ErrorCode::EmptyLevel, "no RAOB fit covers " + std::to_string(p) + " hPa");
    const std::vector<double> alpha = iasi_level_alpha(set, j, covering);
    const double shift = bias ? bias->at(p) : 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < covering.size(); ++i) {
      const std::size_t k = covering[i];
      const double r = set.pairs[k].iasi[j].value - (fits[k].evaluate(p) - shift);
      s += alpha[i] * r * r;
    }
    if (!options.normalized_raw) s /= static_cast<double>(covering.size());
    values[j] = std::sqrt(s);
  }
  return make_uncertainty_profile(UncertaintyComponent::RiRaw, set.iasi_grid, std::move(values));
}

UncertaintyProfile u_ri_harm(const std::vector<std::vector<double>>& smoothed, const ColocationSet& set) {
  check_iasi_grid(set);
  const std::size_t m = set.iasi_grid.size();
  if (smoothed.size() != set.size()) throw Error(ErrorCode::InvalidParams, "one smoothed profile per co-location is required");
  for (const auto& row : smoothed)
    if (row.size() != m) throw Error(ErrorCode::GridMismatch, "smoothed profile does not match the IASI grid");
  std::vector<std::size_t> all(set.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  std::vector<double> values(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::vector<double> alpha = iasi_level_alpha(set, j, all);
    double s = 0.0;
    for (std::size_t k = 0; k < set.size(); ++k) {
      const double r = smoothed[k][j] - set.pairs[k].iasi[j].value;
      s += alpha[k] * r * r;
    }
    values[j] = std::sqrt(s);
  }
  return make_uncertainty_profile(UncertaintyComponent::RiHarmonized, set.iasi_grid, std::move(values));
}

UncertaintyProfile u_ri_harm(const HarmonizationResult& result, const ColocationSet& set) {
  if (result.kernels.iasi_grid != set.iasi_grid)
    throw Error(ErrorCode::GridMismatch, "harmonization result and co-locations use different IASI grids");
  return u_ri_harm(result.smoothed_profiles, set);
}

UncertaintyProfile u_ri_vsmooth(const UncertaintyProfile& u_raw, const UncertaintyProfile& u_harm) {
  if (u_raw.grid != u_harm.grid)
    throw Error(ErrorCode::GridMismatch, "raw and harmonized uncertainties use different grids");
  std::vector<double> values(u_raw.grid.size());
  std::vector<bool> clamped(u_raw.grid.size(), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = u_raw.values[i] * u_raw.values[i] - u_harm.values[i] * u_harm.values[i];
    clamped[i] = d < 0.0;
    values[i] = std::sqrt(std::max(d, 0.0));
  }
  return make_uncertainty_profile(UncertaintyComponent::RiVsmooth, u_raw.grid, std::move(values), std::move(clamped));
}

}  // namespace sondeharm
