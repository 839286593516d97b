#include "sondeharm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sondeharm/error.hpp"

namespace sondeharm {

std::string_view to_string(Instrument instrument) noexcept {
  switch (instrument) {
    case Instrument::Raob: return "RAOB";
    case Instrument::Gruan: return "GRUAN";
    case Instrument::Iasi: return "IASI";
    case Instrument::Truth: return "TRUE";
  }
  return "?";
}

std::string_view to_string(Variable variable) noexcept {
  return variable == Variable::Temperature ? "temperature" : "wvmr";
}

std::string_view to_string(LevelFlag flag) noexcept {
  switch (flag) {
    case LevelFlag::None: return "";
    case LevelFlag::Mandatory: return "mandatory";
    case LevelFlag::Significant: return "significant";
  }
  return "";
}

Variable parse_variable(std::string_view text) {
  if (text == "temperature") return Variable::Temperature;
  if (text == "wvmr") return Variable::Wvmr;
  throw Error(ErrorCode::SchemaError, "unknown variable '" + std::string(text) + "'");
}

LevelFlag parse_level_flag(std::string_view text) {
  if (text.empty()) return LevelFlag::None;
  if (text == "mandatory") return LevelFlag::Mandatory;
  if (text == "significant") return LevelFlag::Significant;
  throw Error(ErrorCode::SchemaError, "unknown level flag '" + std::string(text) + "'");
}

PressureRange default_pressure_range(Variable variable) noexcept {
  return variable == Variable::Temperature ? PressureRange{958.6, 10.0}
                                           : PressureRange{958.6, 300.0};
}

int default_min_raob_levels(Variable variable) noexcept {
  return variable == Variable::Temperature ? 20 : 14;
}

std::vector<double> wmo_mandatory_levels() {
  return {1000, 925, 850, 700, 500, 400, 300, 250, 200, 150, 100, 70, 50, 30, 20, 10};
}

std::vector<double> levels_within(std::span<const double> levels, const PressureRange& range) {
  std::vector<double> out;
  for (double p : levels)
    if (range.contains(p)) out.push_back(p);
  std::sort(out.begin(), out.end(), std::greater<>());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Profile::Profile(Instrument instrument, Variable variable, std::vector<Level> levels,
                 std::string station_id, std::string timestamp)
    : instrument_(instrument),
      variable_(variable),
      levels_(std::move(levels)),
      station_id_(std::move(station_id)),
      timestamp_(std::move(timestamp)) {
  if (levels_.empty()) throw Error(ErrorCode::InvalidProfile, "profile has no levels");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const Level& l = levels_[i];
    if (!(l.pressure > 0.0 && l.pressure <= 1100.0))
      throw Error(ErrorCode::InvalidProfile,
                  "pressure " + std::to_string(l.pressure) + " outside (0, 1100] hPa");
    if (!std::isfinite(l.value))
      throw Error(ErrorCode::InvalidProfile, "non-finite value at level " + std::to_string(i));
    if (!(l.uncertainty >= 0.0) || !std::isfinite(l.uncertainty))
      throw Error(ErrorCode::InvalidProfile,
                  "negative or non-finite uncertainty at level " + std::to_string(i));
    if (instrument_ == Instrument::Gruan && !(l.uncertainty > 0.0))
      throw Error(ErrorCode::InvalidProfile,
                  "GRUAN uncertainty must be positive (level " + std::to_string(i) + ")");
    if (i > 0 && !(l.pressure < levels_[i - 1].pressure))
      throw Error(ErrorCode::InvalidProfile,
                  "pressures must be strictly decreasing (level " + std::to_string(i) + ")");
  }
}

std::vector<double> Profile::pressures() const {
  std::vector<double> out(levels_.size());
  std::transform(levels_.begin(), levels_.end(), out.begin(),
                 [](const Level& l) { return l.pressure; });
  return out;
}

std::vector<double> Profile::values() const {
  std::vector<double> out(levels_.size());
  std::transform(levels_.begin(), levels_.end(), out.begin(),
                 [](const Level& l) { return l.value; });
  return out;
}

std::vector<double> Profile::uncertainties() const {
  std::vector<double> out(levels_.size());
  std::transform(levels_.begin(), levels_.end(), out.begin(),
                 [](const Level& l) { return l.uncertainty; });
  return out;
}

std::optional<Profile> Profile::restricted_to(const PressureRange& range) const {
  std::vector<Level> kept;
  for (const Level& l : levels_)
    if (range.contains(l.pressure)) kept.push_back(l);
  if (kept.empty()) return std::nullopt;
  return Profile(instrument_, variable_, std::move(kept), station_id_, timestamp_);
}

bool within_colocation_window(double distance_km, double delay_h) noexcept {
  return distance_km >= 0.0 && distance_km <= kMaxColocationDistanceKm &&
         std::abs(delay_h) <= kMaxColocationDelayH;
}

void validate_pair(const ColocationPair& pair) {
  if (pair.raob.instrument() != Instrument::Raob)
    throw Error(ErrorCode::InvalidProfile, "pair " + pair.pair_id + ": raob slot is not RAOB");
  if (pair.iasi.instrument() != Instrument::Iasi)
    throw Error(ErrorCode::InvalidProfile, "pair " + pair.pair_id + ": iasi slot is not IASI");
  if (pair.gruan && pair.gruan->instrument() != Instrument::Gruan)
    throw Error(ErrorCode::InvalidProfile, "pair " + pair.pair_id + ": gruan slot is not GRUAN");
  const Variable v = pair.raob.variable();
  if (pair.iasi.variable() != v || (pair.gruan && pair.gruan->variable() != v))
    throw Error(ErrorCode::InvalidProfile, "pair " + pair.pair_id + ": mixed variables");
  if (!within_colocation_window(pair.horizontal_distance_km, pair.time_delay_h))
    throw Error(ErrorCode::InvalidProfile,
                "pair " + pair.pair_id + ": outside the 300 km / 3 h co-location window");
}

std::vector<std::size_t> ColocationSet::gruan_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (pairs[k].gruan) out.push_back(k);
  return out;
}

void validate_set(const ColocationSet& set) {
  for (const ColocationPair& pair : set.pairs) {
    validate_pair(pair);
    if (pair.raob.variable() != set.variable)
      throw Error(ErrorCode::SchemaError, "pair " + pair.pair_id + ": variable mismatch");
    if (pair.iasi.pressures() != set.iasi_grid)
      throw Error(ErrorCode::SchemaError,
                  "pair " + pair.pair_id + ": IASI levels differ from the shared grid");
  }
}

std::vector<double> reciprocal_squared_weights(std::span<const double> uncertainties) {
  if (uncertainties.empty()) throw Error(ErrorCode::EmptyInput, "no uncertainties to weight");
  std::vector<double> w(uncertainties.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double u = uncertainties[i];
    if (!(u > 0.0))
      throw Error(ErrorCode::ZeroUncertainty,
                  "uncertainty " + std::to_string(i) + " is not positive");
    w[i] = 1.0 / (u * u);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> uniform_weights(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no profiles to weight");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

WeightScheme level_weights(std::span<const double> uncertainties) {
  const bool all_positive = std::all_of(uncertainties.begin(), uncertainties.end(),
                                        [](double u) { return u > 0.0; });
  if (all_positive && !uncertainties.empty())
    return {WeightMode::ReciprocalSquaredUncertainty, reciprocal_squared_weights(uncertainties)};
  return {WeightMode::Uniform, uniform_weights(uncertainties.size())};
}

WeightScheme make_weights(std::span<const Profile> profiles, double level, WeightMode mode) {
  if (profiles.empty()) throw Error(ErrorCode::EmptyInput, "no profiles to weight");
  if (mode == WeightMode::Uniform) return {mode, uniform_weights(profiles.size())};
  std::vector<double> u;
  u.reserve(profiles.size());
  const double grid[1] = {level};
  for (const Profile& p : profiles)
    u.push_back(align_to_grid(p, grid, ProfileField::Uncertainty).front());
  return {mode, reciprocal_squared_weights(u)};
}

namespace {

// Index i such that p lies between pressures[i] and pressures[i+1].
std::size_t bracket(std::span<const double> pressures, double p) {
  const bool decreasing = pressures.front() > pressures.back();
  std::size_t i;
  if (decreasing) {
    auto it = std::lower_bound(pressures.begin(), pressures.end(), p, std::greater<>());
    i = static_cast<std::size_t>(it - pressures.begin());
  } else {
    auto it = std::lower_bound(pressures.begin(), pressures.end(), p);
    i = static_cast<std::size_t>(it - pressures.begin());
  }
  if (i == 0) return 0;
  return std::min(i - 1, pressures.size() - 2);
}

double interp_at(std::span<const double> pressures, std::span<const double> values, double p) {
  const std::size_t i = bracket(pressures, p);
  const double x0 = std::log(pressures[i]);
  const double x1 = std::log(pressures[i + 1]);
  const double t = (std::log(p) - x0) / (x1 - x0);
  return values[i] + t * (values[i + 1] - values[i]);
}

}  // namespace

double log_pressure_interp(std::span<const double> pressures, std::span<const double> values,
                           double p) {
  if (pressures.empty() || pressures.size() != values.size())
    throw Error(ErrorCode::EmptyInput, "interpolation table is empty or ragged");
  const double hi = std::max(pressures.front(), pressures.back());
  const double lo = std::min(pressures.front(), pressures.back());
  if (p > hi * (1.0 + 1e-12) || p < lo * (1.0 - 1e-12))
    throw Error(ErrorCode::OutOfRange, "pressure " + std::to_string(p) + " outside [" +
                                           std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (pressures.size() == 1) return values.front();
  return interp_at(pressures, values, std::clamp(p, lo, hi));
}

double log_pressure_interp_clamped(std::span<const double> pressures,
                                   std::span<const double> values, double p) {
  if (pressures.empty() || pressures.size() != values.size())
    throw Error(ErrorCode::EmptyInput, "interpolation table is empty or ragged");
  if (pressures.size() == 1) return values.front();
  const bool decreasing = pressures.front() > pressures.back();
  const double hi = decreasing ? pressures.front() : pressures.back();
  const double lo = decreasing ? pressures.back() : pressures.front();
  if (p >= hi) return decreasing ? values.front() : values.back();
  if (p <= lo) return decreasing ? values.back() : values.front();
  return interp_at(pressures, values, p);
}

std::vector<double> align_to_grid(const Profile& profile, std::span<const double> grid,
                                  ProfileField field) {
  const std::vector<double> p = profile.pressures();
  const std::vector<double> v =
      field == ProfileField::Value ? profile.values() : profile.uncertainties();
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) {
    if (g > profile.bottom() * (1.0 + 1e-12) || g < profile.top() * (1.0 - 1e-12))
      throw Error(ErrorCode::OutOfRange,
                  "grid pressure " + std::to_string(g) + " outside profile span");
    if (p.size() == 1) {
      out.push_back(v.front());
      continue;
    }
    const std::size_t i = bracket(p, g);
    const double d0 = std::abs(p[i] - g);
    const double d1 = std::abs(p[i + 1] - g);
    const std::size_t nearest = d0 <= d1 ? i : i + 1;
    if (std::min(d0, d1) <= kNearestLevelToleranceHpa)
      out.push_back(v[nearest]);
    else
      out.push_back(interp_at(p, v, g));
  }
  return out;
}

std::string_view to_string(UncertaintyComponent component) noexcept {
  switch (component) {
    case UncertaintyComponent::RgTotal: return "rg_total";
    case UncertaintyComponent::RgProcessing: return "rg_processing";
    case UncertaintyComponent::RSparseness: return "r_sparseness";
    case UncertaintyComponent::RiRaw: return "ri_raw";
    case UncertaintyComponent::RiHarmonized: return "ri_harmonized";
    case UncertaintyComponent::RiVsmooth: return "ri_vsmooth";
  }
  return "?";
}

UncertaintyComponent parse_uncertainty_component(std::string_view text) {
  for (auto c : {UncertaintyComponent::RgTotal, UncertaintyComponent::RgProcessing,
                 UncertaintyComponent::RSparseness, UncertaintyComponent::RiRaw,
                 UncertaintyComponent::RiHarmonized, UncertaintyComponent::RiVsmooth})
    if (to_string(c) == text) return c;
  throw Error(ErrorCode::SchemaError, "unknown uncertainty component '" + std::string(text) + "'");
}

UncertaintyProfile make_uncertainty_profile(UncertaintyComponent component,
                                            std::vector<double> grid,
                                            std::vector<double> values,
                                            std::vector<bool> clamped) {
  if (grid.size() != values.size())
    throw Error(ErrorCode::GridMismatch, "uncertainty grid and values differ in length");
  if (grid.empty()) throw Error(ErrorCode::EmptyInput, "empty uncertainty profile");
  for (double v : values)
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidParams, "negative uncertainty value");
  if (clamped.empty()) clamped.assign(values.size(), false);
  const double avg =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return {component, std::move(grid), std::move(values), avg, std::move(clamped)};
}

std::vector<double> log_uniform_grid(double bottom, double top, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {bottom};
  std::vector<double> g(n);
  const double a = std::log(bottom);
  const double b = std::log(top);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = bottom;
  g.back() = top;
  return g;
}

}  // namespace sondeharm
