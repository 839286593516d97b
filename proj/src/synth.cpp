#include "sondeharm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "sondeharm/error.hpp"

namespace sondeharm {

std::string_view to_string(TruthFamily family) noexcept {
  switch (family) {
    case TruthFamily::SmoothPolyLog: return "smooth_poly_log";
    case TruthFamily::PiecewiseLinearKinks: return "piecewise_linear_kinks";
    case TruthFamily::TropopauseTemplate: return "tropopause_template";
  }
  return "?";
}

TruthFamily parse_truth_family(std::string_view text) {
  for (auto f : {TruthFamily::SmoothPolyLog, TruthFamily::PiecewiseLinearKinks,
                 TruthFamily::TropopauseTemplate})
    if (to_string(f) == text) return f;
  throw Error(ErrorCode::ConfigError, "unknown truth family '" + std::string(text) + "'");
}

double BiasSpec::at(double p) const {
  if (pressures.empty()) return constant;
  return log_pressure_interp_clamped(pressures, values, p);
}

std::vector<double> reference_grid(const PressureRange& range, std::span<const double> mandatory,
                                   int points) {
  std::vector<double> grid = log_uniform_grid(range.bottom, range.top, static_cast<std::size_t>(points));
  for (double m : mandatory)
    if (range.contains(m)) grid.push_back(m);
  std::sort(grid.begin(), grid.end(), std::greater<>());
  // Drop log-uniform points that nearly coincide with a mandatory level.
  std::vector<double> out;
  for (double g : grid) {
    const bool is_mandatory = std::find(mandatory.begin(), mandatory.end(), g) != mandatory.end();
    if (!out.empty() && std::abs(std::log(out.back() / g)) < 1e-6) {
      if (is_mandatory) out.back() = g;
      continue;
    }
    out.push_back(g);
  }
  return out;
}

KernelProfile smooth_kernel_profile(std::vector<double> iasi_grid, double sigma_top,
                                    double sigma_bottom, double xi_top, double xi_bottom) {
  KernelProfile kp;
  const double xb = std::log(*std::max_element(iasi_grid.begin(), iasi_grid.end()));
  const double xt = std::log(*std::min_element(iasi_grid.begin(), iasi_grid.end()));
  for (double p : iasi_grid) {
    const double s = xb > xt ? (std::log(p) - xt) / (xb - xt) : 0.0;
    const double ramp = 0.5 * (1.0 - std::cos(std::numbers::pi * s));
    kp.params.push_back({sigma_top + (sigma_bottom - sigma_top) * ramp,
                         xi_top + (xi_bottom - xi_top) * ramp});
  }
  kp.iasi_grid = std::move(iasi_grid);
  return kp;
}

SynthConfig default_synth_config(Variable variable) {
  SynthConfig c;
  c.variable = variable;
  c.range = default_pressure_range(variable);
  if (variable == Variable::Temperature) {
    c.family = TruthFamily::TropopauseTemplate;
    c.kinks = 20;
    c.curvature_threshold = 50.0;
    c.kernel_truth = smooth_kernel_profile(log_uniform_grid(957.0, 11.0, 30), 20.0, 80.0, 0.25, -0.25);
  } else {
    c.family = TruthFamily::PiecewiseLinearKinks;
    c.kinks = 10;
    c.curvature_threshold = 5.0;
    c.kernel_truth = smooth_kernel_profile(log_uniform_grid(957.0, 301.0, 30), 20.0, 60.0, 0.2, -0.2);
  }
  return c;
}

std::mt19937_64 synth_rng(std::uint64_t seed, std::uint64_t k, SynthStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k & 0xffffffffu), static_cast<std::uint32_t>(k >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

TruthProfile::TruthProfile(TruthFamily family, Variable variable, PressureRange range,
                           std::vector<double> params, std::vector<double> kink_log_p)
    : family_(family),
      variable_(variable),
      range_(range),
      params_(std::move(params)),
      kinks_(std::move(kink_log_p)) {
  std::sort(kinks_.begin(), kinks_.end(), std::greater<>());
}

double TruthProfile::operator()(double p) const {
  const double u = std::log(p / range_.bottom);
  const auto& c = params_;
  switch (family_) {
    case TruthFamily::SmoothPolyLog:
      if (variable_ == Variable::Temperature) return c[0] + u * (c[1] + u * (c[2] + u * c[3]));
      return std::exp(c[0] + u * (c[1] + u * c[2]));
    case TruthFamily::PiecewiseLinearKinks: {
      // c[0] value at the bottom, c[1 + i] slope d value / d u below kink i.
      const double xb = std::log(range_.bottom);
      double v = c[0];
      double prev = 0.0;
      for (std::size_t i = 0; i <= kinks_.size(); ++i) {
        const double next = i < kinks_.size() ? kinks_[i] - xb : -1e300;
        if (u >= next) return v + c[1 + i] * (u - prev);
        v += c[1 + i] * (next - prev);
        prev = next;
      }
      return v;
    }
    case TruthFamily::TropopauseTemplate: {
      const double uk = kinks_.front() - std::log(range_.bottom);
      if (variable_ == Variable::Temperature) {
        // c = T0, lapse, strat slope, wiggle amplitude, wiggle length
        if (u >= uk) return c[0] + c[1] * u;
        const double d = u - uk;
        return c[0] + c[1] * uk + c[2] * d + c[3] * std::sin(2.0 * std::numbers::pi * d / c[4]);
      }
      // c = w at the boundary-layer top, decay rate, boundary-layer slope
      if (u >= uk) return c[0] + c[2] * (u - uk);
      return c[0] * std::exp(c[1] * (u - uk));
    }
  }
  return 0.0;
}

std::vector<double> TruthProfile::kinks() const {
  std::vector<double> out;
  for (double x : kinks_) out.push_back(std::exp(x));
  return out;
}

namespace {

double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

double normal(std::mt19937_64& rng, double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

bool near_mandatory(double x, const SynthConfig& config, double width) {
  for (double m : config.mandatory_levels)
    if (config.range.contains(m) && std::abs(std::log(m) - x) < width) return true;
  return false;
}

std::string timestamp_for(std::uint64_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "2020-%02d-%02dT%02d:00:00Z", static_cast<int>(1 + (k / 672) % 12),
                static_cast<int>(1 + (k / 24) % 28), static_cast<int>(k % 24));
  return buf;
}

std::string station_for(std::uint64_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "SYN%05llu", static_cast<unsigned long long>(k));
  return buf;
}

}  // namespace

TruthProfile generate_truth(const SynthConfig& config, std::uint64_t k) {
  auto rng = synth_rng(config.seed, k, SynthStream::Truth);
  const double xb = std::log(config.range.bottom);
  const double xt = std::log(config.range.top);
  const bool temp = config.variable == Variable::Temperature;
  switch (config.family) {
    case TruthFamily::SmoothPolyLog: {
      std::vector<double> c;
      if (temp) {
        c = {normal(rng, 288.0, 4.0), normal(rng, 40.0, 3.0), normal(rng, 7.0, 1.0), normal(rng, 0.6, 0.2)};
      } else {
        c = {normal(rng, std::log(8.0), 0.15), normal(rng, 1.8, 0.2), normal(rng, 0.1, 0.05)};
      }
      return TruthProfile(config.family, config.variable, config.range, std::move(c), {});
    }
    case TruthFamily::PiecewiseLinearKinks: {
      const double h = (xb - xt) / (config.dense_points - 1);
      const double margin = 6.0 * h;
      std::vector<double> kinks;
      const int n = std::max(config.kinks, 0);
      const double lo = xt + margin;
      const double width = (xb - margin - lo) / std::max(n, 1);
      for (int i = 0; i < n; ++i) {
        for (int attempt = 0; attempt < 20; ++attempt) {
          const double x = uniform(rng, lo + i * width, lo + (i + 1) * width);
          if (near_mandatory(x, config, margin)) continue;
          if (std::any_of(kinks.begin(), kinks.end(), [&](double y) { return std::abs(x - y) < margin; }))
            continue;
          kinks.push_back(x);
          break;
        }
      }
      std::vector<double> c;
      c.push_back(temp ? uniform(rng, 283.0, 293.0) : uniform(rng, 7.0, 9.0));
      // Adjacent slopes differ enough for every kink to be a significant level.
      const double min_change = temp ? 5.0 : 0.5;
      for (std::size_t i = 0; i <= kinks.size(); ++i) {
        double s = 0.0;
        do {
          s = temp ? uniform(rng, -20.0, 60.0) : uniform(rng, 1.0, 5.0);
        } while (c.size() > 1 && std::abs(s - c.back()) < min_change);
        c.push_back(s);
      }
      return TruthProfile(config.family, config.variable, config.range, std::move(c), std::move(kinks));
    }
    case TruthFamily::TropopauseTemplate: {
      const double h = (xb - xt) / (config.dense_points - 1);
      const double margin = 6.0 * h;
      if (temp) {
        double xk = 0.0;
        for (int attempt = 0; attempt < 50; ++attempt) {
          xk = std::log(uniform(rng, 200.0, 300.0));
          if (!near_mandatory(xk, config, margin)) break;
        }
        std::vector<double> c = {uniform(rng, 282.0, 294.0), uniform(rng, 40.0, 50.0),
                                 uniform(rng, -12.0, -2.0), uniform(rng, 0.5, 1.5), uniform(rng, 0.3, 0.6)};
        return TruthProfile(config.family, config.variable, config.range, std::move(c), {xk});
      }
      double xk = 0.0;
      for (int attempt = 0; attempt < 50; ++attempt) {
        xk = std::log(uniform(rng, 800.0, 900.0));
        if (!near_mandatory(xk, config, margin)) break;
      }
      std::vector<double> c = {uniform(rng, 6.0, 10.0), uniform(rng, 1.5, 2.5), uniform(rng, 0.0, 3.0)};
      return TruthProfile(config.family, config.variable, config.range, std::move(c), {xk});
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown truth family");
}

Tabulation tabulate(const TruthProfile& truth, const PressureRange& range, int points) {
  Tabulation t;
  t.pressures = log_uniform_grid(range.bottom, range.top, static_cast<std::size_t>(points));
  for (double p : t.pressures) t.values.push_back(truth(p));
  return t;
}

std::vector<double> significant_levels(const TruthProfile& truth, const SynthConfig& config) {
  const int n = config.dense_points;
  const Tabulation tab = tabulate(truth, config.range, n);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = std::log(tab.pressures[i]);
  const double h = (x.front() - x.back()) / (n - 1);
  std::vector<double> d2(n, 0.0);
  for (int i = 1; i + 1 < n; ++i)
    d2[i] = std::abs(tab.values[i + 1] - 2.0 * tab.values[i] + tab.values[i - 1]) / (h * h);

  std::vector<int> candidates;
  for (int i = 1; i + 1 < n; ++i) {
    if (d2[i] < config.curvature_threshold) continue;
    if (!(d2[i] >= d2[i - 1] && d2[i] > d2[i + 1])) continue;
    if (i < 3 || i > n - 4) continue;
    if (near_mandatory(x[i], config, 3.0 * h)) continue;
    candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) { return d2[a] > d2[b]; });
  std::vector<int> picked;
  for (int i : candidates) {
    if (static_cast<int>(picked.size()) >= config.max_significant_levels) break;
    if (std::any_of(picked.begin(), picked.end(),
                    [&](int j) { return std::abs(i - j) < config.min_spacing; }))
      continue;
    picked.push_back(i);
  }
  std::vector<double> out;
  for (int i : picked) {
    double wsum = 0.0, xsum = 0.0;
    for (int j = i - 1; j <= i + 1; ++j) {
      wsum += d2[j];
      xsum += d2[j] * x[j];
    }
    out.push_back(std::exp(xsum / wsum));
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

Profile sample_raob(const TruthProfile& truth, const SynthConfig& config, std::uint64_t k) {
  auto rng = synth_rng(config.seed, k, SynthStream::Raob);
  std::vector<std::pair<double, LevelFlag>> where;
  where.push_back({config.range.bottom, LevelFlag::None});
  for (double m : config.mandatory_levels)
    if (config.range.contains(m) && m != config.range.bottom) where.push_back({m, LevelFlag::Mandatory});
  for (double s : significant_levels(truth, config)) where.push_back({s, LevelFlag::Significant});
  std::sort(where.begin(), where.end(), [](auto& a, auto& b) { return a.first > b.first; });

  std::vector<Level> levels;
  for (auto [p, flag] : where) {
    double v = truth(p) + config.raob_bias.at(p);
    if (config.noise_sd_raob > 0.0) v += normal(rng, 0.0, config.noise_sd_raob);
    levels.push_back({p, v, config.noise_sd_raob, flag});
  }
  return Profile(Instrument::Raob, config.variable, std::move(levels), station_for(k), timestamp_for(k));
}

Profile sample_gruan(const TruthProfile& truth, const SynthConfig& config, std::uint64_t k) {
  auto rng = synth_rng(config.seed, k, SynthStream::Gruan);
  const double u = config.noise_sd_gruan > 0.0 ? config.noise_sd_gruan : config.uncertainty_floor;
  std::vector<Level> levels;
  for (double p : reference_grid(config.range, config.mandatory_levels, config.gruan_levels)) {
    double v = truth(p);
    if (config.noise_sd_gruan > 0.0) v += normal(rng, 0.0, config.noise_sd_gruan);
    const bool mandatory = std::find(config.mandatory_levels.begin(), config.mandatory_levels.end(), p) !=
                           config.mandatory_levels.end();
    levels.push_back({p, v, u, mandatory ? LevelFlag::Mandatory : LevelFlag::None});
  }
  return Profile(Instrument::Gruan, config.variable, std::move(levels), station_for(k), timestamp_for(k));
}

Profile simulate_iasi(const TruthProfile& truth, const SynthConfig& config, std::uint64_t k) {
  const KernelProfile& kp = config.kernel_truth;
  validate(kp);
  auto rng = synth_rng(config.seed, k, SynthStream::Iasi);
  const double u = config.iasi_noise_sd > 0.0 ? config.iasi_noise_sd : config.uncertainty_floor;
  const std::vector<double> kinks = truth.kinks();
  std::vector<Level> levels;
  for (std::size_t j = 0; j < kp.iasi_grid.size(); ++j) {
    const double p = kp.iasi_grid[j];
    const KernelRule rule = make_kernel_rule(p, kp.params[j], config.range, kinks);
    double v = convolve([&](double q) { return truth(q); }, rule);
    if (config.iasi_noise_sd > 0.0) v += normal(rng, 0.0, config.iasi_noise_sd);
    levels.push_back({p, v, u, LevelFlag::None});
  }
  return Profile(Instrument::Iasi, config.variable, std::move(levels), station_for(k), timestamp_for(k));
}

SynthSet generate_set(const SynthConfig& config) {
  if (config.pairs < 1 || config.gruan_pairs < 0 || config.gruan_pairs > config.pairs)
    throw Error(ErrorCode::ConfigError, "synthetic pair counts are inconsistent");
  if (config.noise_sd_raob < 0 || config.noise_sd_gruan < 0 || config.iasi_noise_sd < 0)
    throw Error(ErrorCode::ConfigError, "noise standard deviations must be >= 0");
  validate(config.kernel_truth);
  SynthSet out;
  out.set.variable = config.variable;
  out.set.pressure_range = config.range;
  out.set.iasi_grid = config.kernel_truth.iasi_grid;
  for (int k = 0; k < config.pairs; ++k) {
    const auto kk = static_cast<std::uint64_t>(k);
    TruthProfile truth = generate_truth(config, kk);
    auto geo = synth_rng(config.seed, kk, SynthStream::Geometry);
    const double distance = uniform(geo, 0.0, kMaxColocationDistanceKm);
    const double delay = uniform(geo, -kMaxColocationDelayH, kMaxColocationDelayH);
    char id[32];
    std::snprintf(id, sizeof id, "P%05d", k);
    ColocationPair pair{id, sample_raob(truth, config, kk), simulate_iasi(truth, config, kk),
                        std::nullopt, distance, delay};
    if (k < config.gruan_pairs) pair.gruan = sample_gruan(truth, config, kk);
    out.set.pairs.push_back(std::move(pair));
    out.truths.push_back(std::move(truth));
  }
  return out;
}

}  // namespace sondeharm
