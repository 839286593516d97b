#include "sondeharm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sondeharm/error.hpp"
#include "sondeharm/synth.hpp"

namespace sondeharm {

double BiasProfile::at(double p) const {
  if (grid.empty()) return 0.0;
  return log_pressure_interp_clamped(grid, delta, p);
}

double default_tau_scale(Variable variable) noexcept {
  return variable == Variable::Temperature ? 1.0 : 0.1;
}

namespace {

void rescale_to_mean_one(std::vector<double>& w) {
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  if (!(mean > 0.0)) {
    std::fill(w.begin(), w.end(), 1.0);
    return;
  }
  for (double& v : w) v /= mean;
}

double gruan_u_at(const Profile& g, double p) {
  const double grid[1] = {p};
  if (g.covers(p)) return align_to_grid(g, grid, ProfileField::Uncertainty).front();
  const auto pr = g.pressures();
  const auto u = g.uncertainties();
  return log_pressure_interp_clamped(pr, u, p);
}

}  // namespace

std::vector<double> raob_weights(const ColocationSet& set, std::size_t k, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorCode::ConfigError, "rho must be positive");
  const ColocationPair& pair = set.pairs.at(k);
  const Profile& raob = pair.raob;
  std::vector<double> w(raob.size());
  if (pair.gruan) {
    const auto gruan_idx = set.gruan_indices();
    for (std::size_t j = 0; j < raob.size(); ++j) {
      const double p = raob[j].pressure;
      // sigma_R^2 = rho sigma_G^2; rho cancels after normalization but is
      // kept so the weights are those of the RAOB variances.
      double denom = 0.0;
      for (std::size_t g : gruan_idx) {
        const double u = gruan_u_at(*set.pairs[g].gruan, p);
        denom += 1.0 / (rho * u * u);
      }
      const double u = gruan_u_at(*pair.gruan, p);
      w[j] = (1.0 / (rho * u * u)) / denom;
    }
  } else {
    const auto u = raob.uncertainties();
    w = level_weights(u).values;
  }
  rescale_to_mean_one(w);
  return w;
}

std::vector<SplineFit> fit_all(const ColocationSet& set, SplineKind kind, double tau, double rho) {
  std::vector<SplineFit> fits;
  fits.reserve(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto w = raob_weights(set, k, rho);
    fits.push_back(fit_for_tolerance(set.pairs[k].raob, kind, w, tau, true));
  }
  return fits;
}

Calibrator::Calibrator(const ColocationSet& set, CalibrationOptions options)
    : set_(set), options_(std::move(options)) {
  pairs_ = set.gruan_indices();
  if (pairs_.empty()) throw Error(ErrorCode::NoGruan, "no co-location carries a GRUAN profile");
  for (std::size_t k : pairs_) weights_.push_back(raob_weights(set, k, options_.rho));

  const std::vector<double> candidates =
      reference_grid(set.pressure_range, options_.mandatory_levels, options_.grid_points);
  for (double p : candidates) {
    std::vector<LevelTerm> terms;
    double denom = 0.0;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const ColocationPair& pair = set.pairs[pairs_[i]];
      if (!pair.gruan->covers(p) || !pair.raob.covers(p)) continue;
      const double grid1[1] = {p};
      const double x = align_to_grid(*pair.gruan, grid1).front();
      const double u = align_to_grid(*pair.gruan, grid1, ProfileField::Uncertainty).front();
      terms.push_back({i, x, 1.0 / (u * u)});
      denom += 1.0 / (u * u);
    }
    if (terms.empty()) continue;
    for (LevelTerm& t : terms) t.alpha /= denom;
    grid_.push_back(p);
    terms_.push_back(std::move(terms));
  }
  if (grid_.empty()) throw Error(ErrorCode::NoGruan, "GRUAN and RAOB profiles share no levels");
}

std::vector<SplineFit> Calibrator::fits(double tau) const { return fits(tau, options_.kind); }

std::vector<SplineFit> Calibrator::fits(double tau, SplineKind kind) const {
  std::vector<SplineFit> out;
  out.reserve(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i)
    out.push_back(fit_for_tolerance(set_.pairs[pairs_[i]].raob, kind, weights_[i], tau, true));
  return out;
}

BiasProfile Calibrator::bias(const std::vector<SplineFit>& fits, double tau) const {
  BiasProfile b;
  b.grid = grid_;
  b.tau_used = tau;
  b.delta.resize(grid_.size());
  for (std::size_t l = 0; l < grid_.size(); ++l) {
    double d = 0.0;
    for (const LevelTerm& t : terms_[l]) d += t.alpha * (fits[t.pair].evaluate(grid_[l]) - t.x_gruan);
    b.delta[l] = d;
  }
  return b;
}

double Calibrator::objective(const std::vector<SplineFit>& fits, const BiasProfile& bias) const {
  double total = 0.0;
  for (std::size_t l = 0; l < grid_.size(); ++l) {
    for (const LevelTerm& t : terms_[l]) {
      const double r = t.x_gruan - (fits[t.pair].evaluate(grid_[l]) - bias.delta[l]);
      total += t.alpha * r * r;
    }
  }
  return total;
}

double Calibrator::weighted_rmse(const std::vector<SplineFit>& fits, const BiasProfile& bias) const {
  return std::sqrt(objective(fits, bias) / static_cast<double>(grid_.size()));
}

double Calibrator::rmse_at(double tau, SplineKind kind) const {
  const auto f = fits(tau, kind);
  return weighted_rmse(f, bias(f, tau));
}

TauCalibration Calibrator::optimize_tau() const { return optimize_tau(options_.kind); }

TauCalibration Calibrator::optimize_tau(SplineKind kind) const {
  TauCalibration cal;
  cal.spline_kind = kind;
  const int n = std::max(options_.tau_points, 3);
  const double a = std::log(options_.tau_lo * options_.tau_scale);
  const double b = std::log(options_.tau_hi * options_.tau_scale);
  for (int i = 0; i < n; ++i) {
    const double tau = std::exp(a + (b - a) * i / (n - 1));
    cal.objective_curve.push_back({tau, rmse_at(tau, kind)});
  }
  auto best = std::min_element(cal.objective_curve.begin(), cal.objective_curve.end(),
                               [](auto& x, auto& y) { return x.second < y.second; });
  const auto [lo_it, hi_it] = std::minmax_element(
      cal.objective_curve.begin(), cal.objective_curve.end(),
      [](auto& x, auto& y) { return x.second < y.second; });
  cal.flat_objective = hi_it->second - lo_it->second < 1e-9 * std::max(1.0, hi_it->second);

  double tau_hat = best->first;
  double f_hat = best->second;
  if (!cal.flat_objective) {
    const std::size_t i = static_cast<std::size_t>(best - cal.objective_curve.begin());
    double lo = std::log(cal.objective_curve[i == 0 ? 0 : i - 1].first);
    double hi = std::log(cal.objective_curve[std::min<std::size_t>(i + 1, n - 1)].first);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = rmse_at(std::exp(x1), kind);
    double f2 = rmse_at(std::exp(x2), kind);
    while (hi - lo > options_.golden_rel_tol) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = rmse_at(std::exp(x1), kind);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = rmse_at(std::exp(x2), kind);
      }
    }
    const double xm = f1 <= f2 ? x1 : x2;
    const double fm = std::min(f1, f2);
    if (fm < f_hat) {
      tau_hat = std::exp(xm);
      f_hat = fm;
    }
  }
  // Interpolating fits are a candidate too.
  const double f0 = rmse_at(0.0, kind);
  if (f0 <= f_hat) {
    tau_hat = 0.0;
    f_hat = f0;
  }
  cal.tau_hat = tau_hat;
  cal.objective_at_tau_hat = f_hat;
  return cal;
}

UncertaintyProfile Calibrator::u_rg_total(const std::vector<SplineFit>& fits, const BiasProfile* bias) const {
  std::vector<double> values(grid_.size());
  for (std::size_t l = 0; l < grid_.size(); ++l) {
    double s = 0.0;
    for (const LevelTerm& t : terms_[l]) {
      double r = t.x_gruan - fits[t.pair].evaluate(grid_[l]);
      if (bias) r += bias->delta[l];
      s += t.alpha * r * r;
    }
    values[l] = std::sqrt(s);
  }
  return make_uncertainty_profile(UncertaintyComponent::RgTotal, grid_, std::move(values));
}

BiasProfile estimate_bias(const ColocationSet& set, double tau, const CalibrationOptions& options) {
  if (!(tau >= 0.0)) throw Error(ErrorCode::InvalidParams, "tolerance must be >= 0");
  const Calibrator cal(set, options);
  return cal.bias(cal.fits(tau), tau);
}

TauCalibration optimize_tau(const ColocationSet& set, const CalibrationOptions& options) {
  return Calibrator(set, options).optimize_tau();
}

UncertaintyProfile u_rg_total(const ColocationSet& set, double tau_hat, bool bias_adjusted,
                              const CalibrationOptions& options) {
  const Calibrator cal(set, options);
  const auto fits = cal.fits(tau_hat);
  if (!bias_adjusted) return cal.u_rg_total(fits);
  const BiasProfile b = cal.bias(fits, tau_hat);
  return cal.u_rg_total(fits, &b);
}

UncertaintyProfile u_rg_processing(const UncertaintyProfile& u_tot,
                                   std::span<const double> mandatory_levels) {
  const auto& g = u_tot.grid;
  if (g.empty()) throw Error(ErrorCode::EmptyInput, "empty total uncertainty profile");
  const double hi = *std::max_element(g.begin(), g.end());
  const double lo = *std::min_element(g.begin(), g.end());
  std::vector<double> mp;
  for (double m : mandatory_levels)
    if (m <= hi * (1 + 1e-12) && m >= lo * (1 - 1e-12)) mp.push_back(m);
  std::sort(mp.begin(), mp.end(), std::greater<>());
  mp.erase(std::unique(mp.begin(), mp.end()), mp.end());
  if (mp.empty()) throw Error(ErrorCode::EmptyMandatory, "no mandatory level inside the grid span");
  std::vector<double> mv;
  for (double m : mp) mv.push_back(log_pressure_interp(g, u_tot.values, m));

  std::vector<double> values(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    values[i] = std::min(log_pressure_interp_clamped(mp, mv, g[i]), u_tot.values[i]);
  return make_uncertainty_profile(UncertaintyComponent::RgProcessing, g, std::move(values));
}

UncertaintyProfile u_sparseness(const UncertaintyProfile& u_tot, const UncertaintyProfile& u_proc) {
  if (u_tot.grid != u_proc.grid)
    throw Error(ErrorCode::GridMismatch, "total and processing uncertainties use different grids");
  std::vector<double> values(u_tot.grid.size());
  std::vector<bool> clamped(u_tot.grid.size(), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = u_tot.values[i] * u_tot.values[i] - u_proc.values[i] * u_proc.values[i];
    clamped[i] = d < 0.0;
    values[i] = std::sqrt(std::max(d, 0.0));
  }
  return make_uncertainty_profile(UncertaintyComponent::RSparseness, u_tot.grid, std::move(values),
                                  std::move(clamped));
}

}  // namespace sondeharm
