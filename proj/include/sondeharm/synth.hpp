#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "sondeharm/core.hpp"
#include "sondeharm/kernel.hpp"

namespace sondeharm {

enum class TruthFamily { SmoothPolyLog, PiecewiseLinearKinks, TropopauseTemplate };

std::string_view to_string(TruthFamily family) noexcept;
TruthFamily parse_truth_family(std::string_view text);

/// RAOB bias Delta(p): a constant, or log-p linear through (pressure, value)
/// nodes with constant extension.
struct BiasSpec {
  double constant = 0.0;
  std::vector<double> pressures;  // ground to top; empty means constant
  std::vector<double> values;

  double at(double p) const;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  Variable variable = Variable::Temperature;
  PressureRange range = default_pressure_range(Variable::Temperature);
  std::vector<double> mandatory_levels = wmo_mandatory_levels();
  int pairs = 50;        // K
  int gruan_pairs = 20;  // K_G, the first K_G pairs carry a GRUAN profile
  TruthFamily family = TruthFamily::TropopauseTemplate;
  int kinks = 20;  // PiecewiseLinearKinks only

  double noise_sd_raob = 0.0;
  double noise_sd_gruan = 0.0;
  double iasi_noise_sd = 0.0;
  double uncertainty_floor = 0.01;  // reported when a noise sd is zero
  BiasSpec raob_bias;

  KernelProfile kernel_truth;  // its grid is the IASI grid

  // Significant-level rule on a dense log-p tabulation.
  int dense_points = 400;
  double curvature_threshold = 50.0;  // |d2 value / d(ln p)2|
  int min_spacing = 5;                // dense-grid steps between picks
  int max_significant_levels = 28;

  int gruan_levels = 400;
};

/// Defaults for one variable: range, family, kink count, thresholds, and a
/// 30-level IASI grid with a slowly varying kernel profile.
SynthConfig default_synth_config(Variable variable);

/// Ground truth s0_k(p) of one profile.
class TruthProfile {
 public:
  TruthProfile(TruthFamily family, Variable variable, PressureRange range,
               std::vector<double> params, std::vector<double> kink_log_p);

  TruthFamily family() const noexcept { return family_; }
  double operator()(double p) const;
  /// Pressures where the truth has a slope discontinuity.
  std::vector<double> kinks() const;
  const std::vector<double>& params() const noexcept { return params_; }
  PressureRange range() const noexcept { return range_; }

 private:
  TruthFamily family_;
  Variable variable_;
  PressureRange range_;
  std::vector<double> params_;
  std::vector<double> kinks_;  // log-pressure, descending (ground first)
};

/// RNG stream for (seed, pair index, purpose).
enum class SynthStream : std::uint64_t { Truth = 1, Raob = 2, Gruan = 3, Iasi = 4, Geometry = 5 };
std::mt19937_64 synth_rng(std::uint64_t seed, std::uint64_t k, SynthStream stream);

TruthProfile generate_truth(const SynthConfig& config, std::uint64_t k);

struct Tabulation {
  std::vector<double> pressures;  // ground to top
  std::vector<double> values;
};
Tabulation tabulate(const TruthProfile& truth, const PressureRange& range, int points);

/// Significant levels picked from the dense tabulation: local maxima of the
/// absolute second difference above the threshold, thinned greedily, each
/// refined to the |d2|-weighted centroid of its three nodes.
std::vector<double> significant_levels(const TruthProfile& truth, const SynthConfig& config);

/// Mandatory levels in range, the range bottom (surface) and the significant
/// levels, with bias and Gaussian noise added.
Profile sample_raob(const TruthProfile& truth, const SynthConfig& config, std::uint64_t k);
Profile sample_gruan(const TruthProfile& truth, const SynthConfig& config, std::uint64_t k);
/// Truth convolved with the true kernels by adaptive quadrature, plus noise.
Profile simulate_iasi(const TruthProfile& truth, const SynthConfig& config, std::uint64_t k);

/// Dense reference grid: log-uniform points over the range merged with the
/// mandatory levels inside it.
std::vector<double> reference_grid(const PressureRange& range, std::span<const double> mandatory,
                                   int points);

/// Kernels that vary smoothly (cosine ramp in log-p) from the top to the
/// bottom of the grid.
KernelProfile smooth_kernel_profile(std::vector<double> iasi_grid, double sigma_top,
                                    double sigma_bottom, double xi_top, double xi_bottom);

struct SynthSet {
  ColocationSet set;
  std::vector<TruthProfile> truths;
};

SynthSet generate_set(const SynthConfig& config);

}  // namespace sondeharm
