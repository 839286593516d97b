#include "sondeharm/harmonize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "sondeharm/error.hpp"
#include "sondeharm/quadrature.hpp"

namespace sondeharm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTailMass = 1e-17;
constexpr std::uint32_t kRestartStream = 6;

// Pressures bounding all but kTailMass of the kernel in each tail.
std::pair<double, double> tail_window(double mu, const GevParams& g) {
  const double lt_lo = std::log(-std::log(kTailMass));
  const double lt_hi = std::log(kTailMass);
  auto at = [&](double lt) {
    if (std::abs(g.xi) < kGumbelSwitch) return mu - g.sigma * lt;
    return mu + g.sigma * std::expm1(-g.xi * lt) / g.xi;
  };
  return {at(lt_lo), at(lt_hi)};
}

bool feasible(const GevParams& g, double xi_bound) {
  return g.sigma > 0.0 && std::isfinite(g.sigma) && std::isfinite(g.xi) && std::abs(g.xi) <= xi_bound;
}

GevParams from_internal(std::span<const double> x) { return {std::exp(x[0]), x[1]}; }

}  // namespace

std::string_view to_string(IterationDirection d) noexcept {
  return d == IterationDirection::TopDown ? "top_down" : "bottom_up";
}

IterationDirection parse_iteration_direction(std::string_view text) {
  if (text == "top_down") return IterationDirection::TopDown;
  if (text == "bottom_up") return IterationDirection::BottomUp;
  throw Error(ErrorCode::ConfigError, "unknown iteration direction '" + std::string(text) + "'");
}

std::string_view to_string(MisfitScale s) noexcept {
  return s == MisfitScale::Likelihood ? "likelihood" : "normalized_weights";
}

MisfitScale parse_misfit_scale(std::string_view text) {
  if (text == "likelihood") return MisfitScale::Likelihood;
  if (text == "normalized_weights") return MisfitScale::NormalizedWeights;
  throw Error(ErrorCode::ConfigError, "unknown misfit scale '" + std::string(text) + "'");
}

HarmonizationProblem::HarmonizationProblem(const ColocationSet& set, const std::vector<SplineFit>& fits,
                                           const BiasProfile& bias, HarmonizeOptions options)
    : set_(set), fits_(fits), bias_(bias), options_(std::move(options)), range_(set.pressure_range),
      grid_(set.iasi_grid), k_(set.size()) {
  if (k_ == 0) throw Error(ErrorCode::EmptyInput, "no co-locations to harmonize");
  if (fits_.size() != k_) throw Error(ErrorCode::InvalidParams, "one RAOB fit per co-location is required");
  if (grid_.empty()) throw Error(ErrorCode::EmptyInput, "empty IASI grid");
  if (!(range_.bottom > range_.top)) throw Error(ErrorCode::InvalidParams, "degenerate pressure range");
  if (!(options_.panel_hpa > 0.0) || !(options_.panel_rel > 0.0))
    throw Error(ErrorCode::ConfigError, "quadrature panel widths must be positive");
  const std::size_t m = grid_.size();

  x_.resize(m * k_);
  alpha_.resize(m * k_);
  inv_var_.resize(m * k_);
  std::vector<double> u(k_);
  for (std::size_t j = 0; j < m; ++j) {
    bool all_positive = true;
    for (std::size_t k = 0; k < k_; ++k) {
      const Profile& iasi = set_.pairs[k].iasi;
      if (iasi.size() != m) throw Error(ErrorCode::GridMismatch, "IASI profile does not match the shared grid");
      x_[j * k_ + k] = iasi[j].value;
      u[k] = iasi[j].uncertainty;
      all_positive = all_positive && u[k] > 0.0;
    }
    const WeightScheme ws = level_weights(u);
    for (std::size_t k = 0; k < k_; ++k) {
      alpha_[j * k_ + k] = ws.values[k];
      inv_var_[j * k_ + k] = all_positive ? 1.0 / (u[k] * u[k]) : 1.0;
    }
  }

  const auto& xg = gauss_legendre4_nodes();
  const auto& wg = gauss_legendre4_weights();
  double a = range_.top;
  while (a < range_.bottom) {
    double b = std::min(range_.bottom, a + std::min(options_.panel_hpa, options_.panel_rel * a));
    if (range_.bottom - b < 1e-9 * range_.bottom) b = range_.bottom;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < xg.size(); ++i) {
      nodes_.push_back(mid + half * xg[i]);
      node_w_.push_back(half * wg[i]);
    }
    a = b;
  }

  const std::size_t n = nodes_.size();
  table_.assign(k_ * n, 0.0);
  span_.resize(k_);
  for (std::size_t k = 0; k < k_; ++k) {
    const SplineFit& fit = fits_[k];
    const auto lo = std::lower_bound(nodes_.begin(), nodes_.end(), fit.p_min());
    const auto hi = std::upper_bound(nodes_.begin(), nodes_.end(), fit.p_max());
    span_[k] = {static_cast<std::size_t>(lo - nodes_.begin()), static_cast<std::size_t>(hi - nodes_.begin())};
    if (span_[k].hi <= span_[k].lo)
      throw Error(ErrorCode::OutOfDomain, "RAOB fit of pair " + set_.pairs[k].pair_id + " does not overlap the range");
    double* row = table_.data() + k * n;
    for (std::size_t i = span_[k].lo; i < span_[k].hi; ++i) row[i] = fit.evaluate(nodes_[i]) - bias_.at(nodes_[i]);
  }
}

bool HarmonizationProblem::kernel_weights(std::size_t j, const GevParams& theta, Window& win,
                                          std::vector<double>& w, std::vector<double>& cum) const {
  if (!feasible(theta, options_.xi_bound)) return false;
  const double p = grid_[j];
  if (!(gev_mass(p, theta, range_) > kMinKernelMass)) return false;
  auto [qa, qb] = tail_window(p, theta);
  if (!(qa < qb)) std::swap(qa, qb);
  win.lo = static_cast<std::size_t>(std::lower_bound(nodes_.begin(), nodes_.end(), qa) - nodes_.begin());
  win.hi = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), qb) - nodes_.begin());
  if (win.hi <= win.lo) return false;
  w.resize(win.hi - win.lo);
  cum.resize(w.size() + 1);
  cum[0] = 0.0;
  for (std::size_t i = win.lo; i < win.hi; ++i) {
    w[i - win.lo] = node_w_[i] * gev_pdf(nodes_[i], p, theta);
    cum[i - win.lo + 1] = cum[i - win.lo] + w[i - win.lo];
  }
  return cum.back() > 0.0;
}

bool HarmonizationProblem::smoothed(std::size_t j, const GevParams& theta, std::span<double> out) const {
  if (j >= grid_.size()) throw Error(ErrorCode::OutOfRange, "level index out of range");
  if (out.size() != k_) throw Error(ErrorCode::InvalidParams, "output size must equal the number of pairs");
  thread_local std::vector<double> w;
  thread_local std::vector<double> cum;
  Window win;
  if (!kernel_weights(j, theta, win, w, cum)) return false;
  const double total = cum.back();
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  const auto len = static_cast<Eigen::Index>(w.size());
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> table(table_.data(), static_cast<Eigen::Index>(k_), n);
  Eigen::Map<Eigen::VectorXd> num(out.data(), static_cast<Eigen::Index>(k_));
  num.noalias() = table.middleCols(static_cast<Eigen::Index>(win.lo), len) * Eigen::Map<const Eigen::VectorXd>(w.data(), len);
  for (std::size_t k = 0; k < k_; ++k) {
    const std::size_t lo = std::max(win.lo, span_[k].lo);
    const std::size_t hi = std::min(win.hi, span_[k].hi);
    if (hi <= lo) return false;
    const double denom = cum[hi - win.lo] - cum[lo - win.lo];
    if (!(denom > kMinKernelMass * total)) return false;
    out[k] /= denom;
  }
  return true;
}

double HarmonizationProblem::misfit(std::size_t j, const GevParams& theta) const {
  if (options_.misfit_scale == MisfitScale::NormalizedWeights)
    return weighted_sse(j, theta, options_.iasi_weight_power);
  thread_local std::vector<double> s;
  s.resize(k_);
  if (!smoothed(j, theta, s)) return kInf;
  double total = 0.0;
  for (std::size_t k = 0; k < k_; ++k) {
    const double r = x_[j * k_ + k] - s[k];
    total += inv_var_[j * k_ + k] * r * r;
  }
  return total;
}

double HarmonizationProblem::weighted_sse(std::size_t j, const GevParams& theta, double power) const {
  thread_local std::vector<double> s;
  s.resize(k_);
  if (!smoothed(j, theta, s)) return kInf;
  double total = 0.0;
  for (std::size_t k = 0; k < k_; ++k) {
    const double r = x_[j * k_ + k] - s[k];
    total += std::pow(alpha_[j * k_ + k], power) * r * r;
  }
  return total;
}

double HarmonizationProblem::level_objective(std::size_t j, const GevParams& theta, double power) const {
  if (j >= grid_.size()) throw Error(ErrorCode::OutOfRange, "level index out of range");
  validate(theta, options_.xi_bound);
  double total = 0.0;
  for (std::size_t k = 0; k < k_; ++k) {
    const SplineFit& fit = fits_[k];
    const std::vector<double> knots = fit.knot_pressures();
    const KernelRule rule = make_kernel_rule(grid_[j], theta, kernel_range(fit, range_), knots);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      if (rule.weights[i] != 0.0) s += rule.weights[i] * (fit.evaluate(rule.nodes[i]) - bias_.at(rule.nodes[i]));
    const double r = x_[j * k_ + k] - s;
    total += std::pow(alpha_[j * k_ + k], power) * r * r;
  }
  return total;
}

FirstLevelResult fit_first_level(const HarmonizationProblem& problem, std::size_t j) {
  const HarmonizeOptions& o = problem.options();
  if (o.restarts < 1) throw Error(ErrorCode::ConfigError, "at least one restart is required");
  if (!(o.init_sigma_lo > 0.0) || !(o.init_sigma_hi >= o.init_sigma_lo))
    throw Error(ErrorCode::ConfigError, "invalid restart scale interval");
  std::seed_seq seq{static_cast<std::uint32_t>(o.seed & 0xffffffffu), static_cast<std::uint32_t>(o.seed >> 32),
                    static_cast<std::uint32_t>(j), kRestartStream};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> log_sigma(std::log(o.init_sigma_lo), std::log(o.init_sigma_hi));
  std::uniform_real_distribution<double> shape(-o.init_xi_bound, o.init_xi_bound);

  auto f = [&](std::span<const double> x) { return problem.misfit(j, from_internal(x)); };
  const double steps[2] = {0.2, 0.1};
  FirstLevelResult best;
  best.misfit = kInf;
  for (int r = 0; r < o.restarts; ++r) {
    const double s0 = log_sigma(rng);
    const double x0 = shape(rng);
    try {
      const NelderMeadResult res = nelder_mead(f, {s0, x0}, steps, o.simplex);
      if (!std::isfinite(res.value)) continue;
      ++best.restarts_used;
      if (res.value < best.misfit) {
        best.misfit = res.value;
        best.params = from_internal(res.x);
        best.best_restart = r;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OptimFailed) throw;
    }
  }
  if (best.restarts_used == 0)
    throw Error(ErrorCode::AllRestartsFailed,
                "no restart produced a finite objective at " + std::to_string(problem.grid()[j]) + " hPa");
  return best;
}

double step_penalty(const GevParams& prev, const GevParams& next, const std::array<double, 2>& sigma_zeta) {
  const double ds = next.sigma - prev.sigma;
  const double dx = next.xi - prev.xi;
  return ds * ds / sigma_zeta[0] + dx * dx / sigma_zeta[1];
}

LevelStep fit_level_j(const HarmonizationProblem& problem, std::size_t j, const GevParams& prev,
                      const std::array<double, 2>* sigma_zeta) {
  validate(prev, problem.options().xi_bound);
  if (sigma_zeta && !((*sigma_zeta)[0] > 0.0 && (*sigma_zeta)[1] > 0.0))
    throw Error(ErrorCode::InvalidParams, "innovation variances must be positive");
  auto f = [&](std::span<const double> x) {
    const GevParams g = from_internal(x);
    const double m = problem.misfit(j, g);
    return sigma_zeta ? m + step_penalty(prev, g, *sigma_zeta) : m;
  };
  double steps[2] = {0.2, 0.1};
  if (sigma_zeta) {
    steps[0] = std::clamp(std::sqrt((*sigma_zeta)[0]) / prev.sigma, 1e-4, 0.2);
    steps[1] = std::clamp(std::sqrt((*sigma_zeta)[1]), 1e-4, 0.1);
  }
  const NelderMeadResult res = nelder_mead(f, {std::log(prev.sigma), prev.xi}, steps, problem.options().simplex);
  LevelStep step;
  step.params = from_internal(res.x);
  step.misfit = problem.misfit(j, step.params);
  step.penalty = sigma_zeta ? step_penalty(prev, step.params, *sigma_zeta) : 0.0;
  if (!std::isfinite(step.misfit))
    throw Error(ErrorCode::OptimFailed, "no feasible kernel at " + std::to_string(problem.grid()[j]) + " hPa");
  return step;
}

std::vector<std::size_t> level_order(std::size_t m, IterationDirection direction) {
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = direction == IterationDirection::BottomUp ? i : m - 1 - i;
  return order;
}

std::array<double, 2> sigma_zeta_from_path(std::span<const GevParams> path, double floor) {
  std::array<double, 2> v = {0.0, 0.0};
  if (path.size() >= 2) {
    for (std::size_t i = 1; i < path.size(); ++i) {
      const double ds = path[i].sigma - path[i - 1].sigma;
      const double dx = path[i].xi - path[i - 1].xi;
      v[0] += ds * ds;
      v[1] += dx * dx;
    }
    v[0] /= static_cast<double>(path.size() - 1);
    v[1] /= static_cast<double>(path.size() - 1);
  }
  return {std::max(v[0], floor), std::max(v[1], floor)};
}

SigmaZetaEstimate estimate_sigma_zeta(const HarmonizationProblem& problem, const GevParams& first) {
  const auto order = level_order(problem.levels(), problem.options().direction);
  SigmaZetaEstimate est;
  est.path.reserve(order.size());
  est.path.push_back(first);
  for (std::size_t i = 1; i < order.size(); ++i)
    est.path.push_back(fit_level_j(problem, order[i], est.path.back(), nullptr).params);
  est.degenerate = true;
  for (std::size_t i = 1; i < est.path.size(); ++i)
    if (!(est.path[i] == est.path[i - 1])) est.degenerate = false;
  est.sigma_zeta = sigma_zeta_from_path(est.path, problem.options().sigma_zeta_floor);
  return est;
}

HarmonizationResult harmonize(const HarmonizationProblem& problem) {
  const std::size_t m = problem.levels();
  const HarmonizeOptions& o = problem.options();
  const auto order = level_order(m, o.direction);

  HarmonizationResult res;
  res.direction = o.direction;
  res.kernels.iasi_grid = problem.grid();
  res.kernels.params.resize(m);
  res.misfit_per_level.assign(m, 0.0);
  res.penalty_per_level.assign(m, 0.0);
  res.objective_per_level.assign(m, 0.0);
  res.weighted_sse_per_level.assign(m, 0.0);
  res.unpenalized_path.resize(m);

  const FirstLevelResult first = fit_first_level(problem, order[0]);
  res.restarts_used = first.restarts_used;
  const SigmaZetaEstimate est = estimate_sigma_zeta(problem, first.params);
  res.kernels.sigma_zeta = est.sigma_zeta;
  for (std::size_t i = 0; i < m; ++i) res.unpenalized_path[order[i]] = est.path[i];

  res.kernels.params[order[0]] = first.params;
  res.misfit_per_level[order[0]] = first.misfit;
  GevParams prev = first.params;
  for (std::size_t i = 1; i < m; ++i) {
    const std::size_t j = order[i];
    const LevelStep step = fit_level_j(problem, j, prev, &res.kernels.sigma_zeta);
    res.kernels.params[j] = step.params;
    res.misfit_per_level[j] = step.misfit;
    res.penalty_per_level[j] = step.penalty;
    prev = step.params;
  }

  const std::size_t kp = problem.pairs();
  res.smoothed_profiles.assign(kp, std::vector<double>(m, 0.0));
  std::vector<double> s(kp);
  for (std::size_t j = 0; j < m; ++j) {
    res.objective_per_level[j] = res.misfit_per_level[j] + res.penalty_per_level[j];
    res.weighted_sse_per_level[j] = problem.weighted_sse(j, res.kernels.params[j], o.iasi_weight_power);
    if (!problem.smoothed(j, res.kernels.params[j], s))
      throw Error(ErrorCode::ZeroMass, "estimated kernel has no mass at " + std::to_string(problem.grid()[j]) + " hPa");
    for (std::size_t k = 0; k < kp; ++k) res.smoothed_profiles[k][j] = s[k];
  }

  const std::size_t b = static_cast<std::size_t>(std::max(0, o.border_levels));
  res.border.resize(m);
  for (std::size_t j = 0; j < m; ++j) res.border[j] = j < b || j + b >= m;
  return res;
}

HarmonizationResult harmonize(const ColocationSet& set, const std::vector<SplineFit>& fits,
                              const BiasProfile& bias, const HarmonizeOptions& options) {
  const HarmonizationProblem problem(set, fits, bias, options);
  return harmonize(problem);
}

double profile_neg2_loglik(const HarmonizationProblem& problem, const KernelProfile& kernels,
                           IterationDirection direction) {
  if (kernels.params.size() != problem.levels())
    throw Error(ErrorCode::GridMismatch, "kernel profile does not match the IASI grid");
  const auto order = level_order(problem.levels(), direction);
  double total = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    total += problem.misfit(order[i], kernels.params[order[i]]);
    if (i > 0) total += step_penalty(kernels.params[order[i - 1]], kernels.params[order[i]], kernels.sigma_zeta);
  }
  return total;
}

}  // namespace sondeharm
