#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sondeharm {

enum class Instrument { Raob, Gruan, Iasi, Truth };
enum class Variable { Temperature, Wvmr };
enum class LevelFlag { None, Mandatory, Significant };

std::string_view to_string(Instrument instrument) noexcept;
std::string_view to_string(Variable variable) noexcept;
std::string_view to_string(LevelFlag flag) noexcept;
Variable parse_variable(std::string_view text);
LevelFlag parse_level_flag(std::string_view text);

/// Vertical extent in hPa. `bottom` is the high-pressure end (near ground).
struct PressureRange {
  double bottom = 0.0;
  double top = 0.0;

  bool contains(double p) const noexcept { return p <= bottom && p >= top; }
  bool operator==(const PressureRange&) const = default;
};

/// Filter constants used for the two variables.
PressureRange default_pressure_range(Variable variable) noexcept;
int default_min_raob_levels(Variable variable) noexcept;

/// WMO standard mandatory levels, ground to top.
std::vector<double> wmo_mandatory_levels();
std::vector<double> levels_within(std::span<const double> levels, const PressureRange& range);

struct Level {
  double pressure = 0.0;     // hPa
  double value = 0.0;        // K or g/kg
  double uncertainty = 0.0;  // same units as value
  LevelFlag flag = LevelFlag::None;

  bool operator==(const Level&) const = default;
};

/// One sounding. Levels are ordered ground to top (strictly decreasing
/// pressure) and validated at construction; the object is immutable after.
class Profile {
 public:
  Profile(Instrument instrument, Variable variable, std::vector<Level> levels,
          std::string station_id = {}, std::string timestamp = {});

  Instrument instrument() const noexcept { return instrument_; }
  Variable variable() const noexcept { return variable_; }
  const std::string& station_id() const noexcept { return station_id_; }
  const std::string& timestamp() const noexcept { return timestamp_; }

  std::span<const Level> levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return levels_.size(); }
  const Level& operator[](std::size_t i) const { return levels_[i]; }

  std::vector<double> pressures() const;
  std::vector<double> values() const;
  std::vector<double> uncertainties() const;

  double bottom() const noexcept { return levels_.front().pressure; }
  double top() const noexcept { return levels_.back().pressure; }
  bool covers(double p) const noexcept { return p <= bottom() && p >= top(); }

  /// Copy restricted to levels inside `range`; nullopt if nothing survives.
  std::optional<Profile> restricted_to(const PressureRange& range) const;

  bool operator==(const Profile&) const = default;

 private:
  Instrument instrument_;
  Variable variable_;
  std::vector<Level> levels_;
  std::string station_id_;
  std::string timestamp_;
};

struct ColocationPair {
  std::string pair_id;
  Profile raob;
  Profile iasi;
  std::optional<Profile> gruan;
  double horizontal_distance_km = 0.0;
  double time_delay_h = 0.0;
};

inline constexpr double kMaxColocationDistanceKm = 300.0;
inline constexpr double kMaxColocationDelayH = 3.0;

/// Throws InvalidProfile when instrument roles, variables or the
/// distance/delay window are violated.
void validate_pair(const ColocationPair& pair);
bool within_colocation_window(double distance_km, double delay_h) noexcept;

struct ColocationSet {
  Variable variable = Variable::Temperature;
  PressureRange pressure_range;
  std::vector<double> iasi_grid;  // ground to top, shared by every pair
  std::vector<ColocationPair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
  std::vector<std::size_t> gruan_indices() const;
};

/// Checks the set-level invariants (shared variable and IASI grid).
void validate_set(const ColocationSet& set);

enum class WeightMode { ReciprocalSquaredUncertainty, Uniform };

struct WeightScheme {
  WeightMode mode = WeightMode::Uniform;
  std::vector<double> values;
};

/// u^-2 / sum(u^-2). Throws ZeroUncertainty on u == 0, EmptyInput on empty.
std::vector<double> reciprocal_squared_weights(std::span<const double> uncertainties);
std::vector<double> uniform_weights(std::size_t n);

/// Normalized reciprocal-squared weights when every uncertainty is positive,
/// uniform weights otherwise.
WeightScheme level_weights(std::span<const double> uncertainties);

/// Weights across `profiles` at one pressure level, using each profile's
/// uncertainty aligned to that level.
WeightScheme make_weights(std::span<const Profile> profiles, double level, WeightMode mode);

/// Linear interpolation in log-pressure. `pressures` strictly monotone.
/// Throws OutOfRange when p is outside the tabulated span.
double log_pressure_interp(std::span<const double> pressures, std::span<const double> values,
                           double p);

/// As log_pressure_interp but holds the end values outside the span.
double log_pressure_interp_clamped(std::span<const double> pressures,
                                   std::span<const double> values, double p);

enum class ProfileField { Value, Uncertainty };

inline constexpr double kNearestLevelToleranceHpa = 1.0;

/// Samples a profile on `grid`: nearest level when one lies within 1 hPa,
/// log-pressure interpolation otherwise.
std::vector<double> align_to_grid(const Profile& profile, std::span<const double> grid,
                                  ProfileField field = ProfileField::Value);

enum class UncertaintyComponent {
  RgTotal,
  RgProcessing,
  RSparseness,
  RiRaw,
  RiHarmonized,
  RiVsmooth,
};

std::string_view to_string(UncertaintyComponent component) noexcept;
UncertaintyComponent parse_uncertainty_component(std::string_view text);

struct UncertaintyProfile {
  UncertaintyComponent component = UncertaintyComponent::RgTotal;
  std::vector<double> grid;
  std::vector<double> values;
  double profile_average = 0.0;
  std::vector<bool> clamped;  // true where a negative quadratic difference was clamped
};

UncertaintyProfile make_uncertainty_profile(UncertaintyComponent component,
                                            std::vector<double> grid,
                                            std::vector<double> values,
                                            std::vector<bool> clamped = {});

/// Log-uniform grid from `bottom` to `top` inclusive, ground to top.
std::vector<double> log_uniform_grid(double bottom, double top, std::size_t n);

}  // namespace sondeharm
