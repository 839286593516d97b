#include "sondeharm/splines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "sondeharm/error.hpp"

namespace sondeharm {

std::string_view to_string(SplineKind kind) noexcept {
  switch (kind) {
    case SplineKind::LinearB: return "linear";
    case SplineKind::CubicB: return "cubic";
    case SplineKind::HermiteInterp: return "hermite";
  }
  return "?";
}

SplineKind parse_spline_kind(std::string_view text) {
  if (text == "linear") return SplineKind::LinearB;
  if (text == "cubic") return SplineKind::CubicB;
  if (text == "hermite") return SplineKind::HermiteInterp;
  throw Error(ErrorCode::ConfigError, "unknown spline kind '" + std::string(text) + "'");
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Second derivatives of the natural cubic interpolant as a linear map of the
// knot values: M = C gamma with M_0 = M_{N-1} = 0.
RowMatrix natural_cubic_curvature(std::span<const double> x) {
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  RowMatrix c = RowMatrix::Zero(n, n);
  if (n < 3) return c;
  const Eigen::Index m = n - 2;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = i + 1;
    const double h0 = x[j] - x[j - 1];
    const double h1 = x[j + 1] - x[j];
    t(i, i) = (h0 + h1) / 3.0;
    if (i > 0) t(i, i - 1) = h0 / 6.0;
    if (i + 1 < m) t(i, i + 1) = h1 / 6.0;
    q(i, j - 1) = 1.0 / h0;
    q(i, j) = -(1.0 / h0 + 1.0 / h1);
    q(i, j + 1) = 1.0 / h1;
  }
  c.block(1, 0, m, n) = t.ldlt().solve(q);
  return c;
}

// Weighted least-squares straight line through (x, y), evaluated at x. Falls
// back to zero when fewer than two distinct weighted abscissae exist.
std::vector<double> weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                                  const std::vector<double>& w) {
  double sw = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    mx += w[i] * x[i];
    my += w[i] * y[i];
  }
  std::vector<double> out(x.size(), 0.0);
  if (!(sw > 0.0)) return out;
  mx /= sw;
  my /= sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = my + slope * (x[i] - mx);
  return out;
}

}  // namespace

std::vector<double> curvature_operator(SplineKind kind, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> d(n * n, 0.0);
  if (n < 3) return d;
  if (kind == SplineKind::CubicB) {
    const RowMatrix c = natural_cubic_curvature(x);
    std::copy(c.data(), c.data() + c.size(), d.begin());
    return d;
  }
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double h0 = x[j] - x[j - 1];
    const double h1 = x[j + 1] - x[j];
    const double span = h0 + h1;
    d[j * n + j - 1] = 2.0 / (h0 * span);
    d[j * n + j] = -2.0 / (h0 * h1);
    d[j * n + j + 1] = 2.0 / (h1 * span);
  }
  return d;
}

SplineFit::SplineFit(SplineKind kind, std::vector<double> log_knots,
                     std::vector<double> coefficients, double lambda, double tau)
    : kind_(kind),
      x_(std::move(log_knots)),
      gamma_(std::move(coefficients)),
      lambda_(lambda),
      tau_(tau) {
  if (x_.size() < 2) throw Error(ErrorCode::TooFewPoints, "a spline needs at least two knots");
  for (std::size_t i = 1; i < x_.size(); ++i)
    if (!(x_[i] > x_[i - 1]))
      throw Error(ErrorCode::InvalidParams, "spline knots must be strictly ascending");
  const std::size_t expected = kind_ == SplineKind::HermiteInterp ? 2 * x_.size() : x_.size();
  if (gamma_.size() != expected)
    throw Error(ErrorCode::InvalidParams, "coefficient count does not match the spline kind");
  if (kind_ == SplineKind::CubicB) {
    const RowMatrix c = natural_cubic_curvature(x_);
    curvature_map_.assign(c.data(), c.data() + c.size());
    const std::size_t n = x_.size();
    second_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < n; ++b) second_[i] += curvature_map_[i * n + b] * gamma_[b];
  }
}

std::vector<double> SplineFit::knot_pressures() const {
  std::vector<double> p(x_.size());
  std::transform(x_.begin(), x_.end(), p.begin(), [](double x) { return std::exp(x); });
  return p;
}

double SplineFit::p_min() const noexcept { return std::exp(x_.front()); }
double SplineFit::p_max() const noexcept { return std::exp(x_.back()); }

bool SplineFit::in_domain(double p) const noexcept {
  if (!(p > 0.0)) return false;
  const double x = std::log(p);
  return x >= x_.front() - 1e-12 && x <= x_.back() + 1e-12;
}

std::size_t SplineFit::interval(double x) const noexcept {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double SplineFit::evaluate(double p) const {
  if (!in_domain(p))
    throw Error(ErrorCode::OutOfDomain, "pressure " + std::to_string(p) + " outside spline domain");
  const double x = std::clamp(std::log(p), x_.front(), x_.back());
  const std::size_t j = interval(x);
  const double h = x_[j + 1] - x_[j];
  const double t = (x - x_[j]) / h;
  switch (kind_) {
    case SplineKind::LinearB:
      return gamma_[j] + t * (gamma_[j + 1] - gamma_[j]);
    case SplineKind::CubicB: {
      const double a = 1.0 - t;
      const double b = t;
      return a * gamma_[j] + b * gamma_[j + 1] +
             ((a * a * a - a) * second_[j] + (b * b * b - b) * second_[j + 1]) * h * h / 6.0;
    }
    case SplineKind::HermiteInterp: {
      const std::size_t n = x_.size();
      const double t2 = t * t;
      const double t3 = t2 * t;
      return (2 * t3 - 3 * t2 + 1) * gamma_[j] + (t3 - 2 * t2 + t) * h * gamma_[n + j] +
             (-2 * t3 + 3 * t2) * gamma_[j + 1] + (t3 - t2) * h * gamma_[n + j + 1];
    }
  }
  return 0.0;
}

std::vector<double> SplineFit::evaluate(std::span<const double> pressures) const {
  std::vector<double> out;
  out.reserve(pressures.size());
  for (double p : pressures) out.push_back(evaluate(p));
  return out;
}

std::vector<double> SplineFit::basis(double p) const {
  std::vector<double> out(gamma_.size());
  basis_into(p, out);
  return out;
}

void SplineFit::basis_into(double p, std::span<double> out) const {
  if (!in_domain(p))
    throw Error(ErrorCode::OutOfDomain, "pressure " + std::to_string(p) + " outside spline domain");
  std::fill(out.begin(), out.end(), 0.0);
  const double x = std::clamp(std::log(p), x_.front(), x_.back());
  const std::size_t j = interval(x);
  const double h = x_[j + 1] - x_[j];
  const double t = (x - x_[j]) / h;
  const std::size_t n = x_.size();
  switch (kind_) {
    case SplineKind::LinearB:
      out[j] = 1.0 - t;
      out[j + 1] = t;
      break;
    case SplineKind::CubicB: {
      const double a = 1.0 - t;
      const double b = t;
      const double ca = (a * a * a - a) * h * h / 6.0;
      const double cb = (b * b * b - b) * h * h / 6.0;
      for (std::size_t k = 0; k < n; ++k)
        out[k] = ca * curvature_map_[j * n + k] + cb * curvature_map_[(j + 1) * n + k];
      out[j] += a;
      out[j + 1] += b;
      break;
    }
    case SplineKind::HermiteInterp: {
      const double t2 = t * t;
      const double t3 = t2 * t;
      out[j] = 2 * t3 - 3 * t2 + 1;
      out[n + j] = (t3 - 2 * t2 + t) * h;
      out[j + 1] = -2 * t3 + 3 * t2;
      out[n + j + 1] = (t3 - t2) * h;
      break;
    }
  }
}

std::vector<double> SplineFit::knot_second_derivatives() const {
  const std::size_t n = x_.size();
  if (kind_ == SplineKind::CubicB) return second_;
  if (kind_ == SplineKind::LinearB) {
    const std::vector<double> d = curvature_operator(kind_, x_);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < n; ++b) out[i] += d[i * n + b] * gamma_[b];
    return out;
  }
  // Hermite: one-sided second derivative from the interval to the right.
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double h = x_[j + 1] - x_[j];
    out[j] = (6 * (gamma_[j + 1] - gamma_[j]) / h - 4 * gamma_[n + j] - 2 * gamma_[n + j + 1]) / h;
  }
  const double h = x_[n - 1] - x_[n - 2];
  out[n - 1] =
      (-6 * (gamma_[n - 1] - gamma_[n - 2]) / h + 2 * gamma_[n + n - 2] + 4 * gamma_[n + n - 1]) / h;
  return out;
}

SplineFit SplineFit::with_coefficients(std::vector<double> coefficients) const {
  return SplineFit(kind_, x_, std::move(coefficients), lambda_, tau_);
}

KnotData knot_data(const Profile& profile, std::span<const double> profile_weights) {
  const std::size_t n = profile.size();
  if (!profile_weights.empty() && profile_weights.size() != n)
    throw Error(ErrorCode::InvalidParams, "weights do not match the profile levels");
  KnotData d;
  d.x.resize(n);
  d.y.resize(n);
  d.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = n - 1 - i;
    d.x[i] = std::log(profile[src].pressure);
    d.y[i] = profile[src].value;
    d.w[i] = profile_weights.empty() ? 1.0 : profile_weights[src];
    if (!(d.w[i] >= 0.0) || !std::isfinite(d.w[i]))
      throw Error(ErrorCode::InvalidParams, "weights must be finite and non-negative");
  }
  return d;
}

SplineFit fit_penalized(const Profile& profile, SplineKind kind, double lambda,
                        std::span<const double> weights) {
  if (kind == SplineKind::HermiteInterp)
    throw Error(ErrorCode::InvalidParams, "Hermite interpolants are not penalized fits");
  if (profile.size() < 3)
    throw Error(ErrorCode::TooFewPoints, "penalized fit needs at least three points");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::InvalidParams, "smoothing factor must be finite and >= 0");
  const KnotData d = knot_data(profile, weights);
  const std::size_t n = d.x.size();
  if (lambda == 0.0) return SplineFit(kind, d.x, d.y, 0.0, 0.0);

  // The penalty annihilates straight lines in x, so the weighted LS line is
  // removed first and only the (small) remainder goes through the stacked
  // system [sqrt(W); sqrt(lambda W) D]. This keeps full accuracy for lambda
  // up to 1e12.
  const std::vector<double> line = weighted_line(d.x, d.y, d.w);
  const std::vector<double> dop = curvature_operator(kind, d.x);
  const Eigen::Index rows = static_cast<Eigen::Index>(2 * n - 2);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  for (std::size_t j = 0; j < n; ++j) {
    const double sw = std::sqrt(d.w[j]);
    a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = sw;
    rhs(static_cast<Eigen::Index>(j)) = sw * (d.y[j] - line[j]);
  }
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double s = std::sqrt(lambda * d.w[j]);
    const Eigen::Index r = static_cast<Eigen::Index>(n + j - 1);
    for (std::size_t b = 0; b < n; ++b) a(r, static_cast<Eigen::Index>(b)) = s * dop[j * n + b];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < static_cast<Eigen::Index>(n))
    throw Error(ErrorCode::SingularSystem, "penalized system is rank deficient");
  const Eigen::VectorXd rest = qr.solve(rhs);
  std::vector<double> coeffs(n);
  for (std::size_t j = 0; j < n; ++j) {
    coeffs[j] = line[j] + rest(static_cast<Eigen::Index>(j));
    if (!std::isfinite(coeffs[j]))
      throw Error(ErrorCode::SingularSystem, "non-finite spline coefficients");
  }
  return SplineFit(kind, d.x, std::move(coeffs), lambda, 0.0);
}

SplineFit fit_penalized(const Profile& profile, SplineKind kind, double lambda,
                        const WeightScheme& weights) {
  return fit_penalized(profile, kind, lambda, std::span<const double>(weights.values));
}

SplineFit fit_hermite(const Profile& profile) {
  if (profile.size() < 2) throw Error(ErrorCode::TooFewPoints, "Hermite fit needs two points");
  const KnotData d = knot_data(profile, {});
  const std::size_t n = d.x.size();
  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) secant[i] = (d.y[i + 1] - d.y[i]) / (d.x[i + 1] - d.x[i]);

  std::vector<double> slope(n, 0.0);
  slope.front() = secant.front();
  slope.back() = secant.back();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double a = secant[i - 1];
    const double b = secant[i];
    slope[i] = (a * b > 0.0) ? 0.5 * (a + b) : 0.0;
  }
  // Fritsch-Carlson: keep (alpha, beta) inside the circle of radius 3.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (secant[i] == 0.0) {
      slope[i] = 0.0;
      slope[i + 1] = 0.0;
      continue;
    }
    const double alpha = slope[i] / secant[i];
    const double beta = slope[i + 1] / secant[i];
    if (alpha < 0.0) slope[i] = 0.0;
    if (beta < 0.0) slope[i + 1] = 0.0;
    const double r2 = alpha * alpha + beta * beta;
    if (r2 > 9.0) {
      const double s = 3.0 / std::sqrt(r2);
      slope[i] = s * alpha * secant[i];
      slope[i + 1] = s * beta * secant[i];
    }
  }
  std::vector<double> coeffs = d.y;
  coeffs.insert(coeffs.end(), slope.begin(), slope.end());
  return SplineFit(SplineKind::HermiteInterp, d.x, std::move(coeffs), 0.0, 0.0);
}

double tolerance_criterion(const SplineFit& fit, const Profile& profile,
                           std::span<const double> weights) {
  const std::size_t n = profile.size();
  if (!weights.empty() && weights.size() != n)
    throw Error(ErrorCode::InvalidParams, "weights do not match the profile levels");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = profile[i].value - fit.evaluate(profile[i].pressure);
    total += r * r * (weights.empty() ? 1.0 : weights[i]);
  }
  return total / static_cast<double>(n);
}

namespace {

// Tolerance criterion as a function of lambda in O(N) per evaluation.
// With z = W^(1/2) gamma the normal equations read (I + lambda S) z = W^(1/2) y,
// S = W^(-1/2) D'WD W^(-1/2) = U diag(e) U', so the weighted residual norm is
// sum_i (lambda e_i / (1 + lambda e_i))^2 b_i^2 with b = U' W^(1/2) y. The
// weighted LS line is removed from y first; it lies in the null space of D.
class SpectralCriterion {
 public:
  SpectralCriterion(const KnotData& d, SplineKind kind) : n_(d.x.size()) {
    const std::vector<double> line = weighted_line(d.x, d.y, d.w);
    const std::vector<double> dop = curvature_operator(kind, d.x);
    const Eigen::Index n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd dm(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) dm(i, j) = dop[i * n + j];
    Eigen::VectorXd sw(n), ys(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      sw(j) = std::sqrt(d.w[j]);
      ys(j) = sw(j) * (d.y[j] - line[j]);
    }
    // S = (W^(1/2) D W^(-1/2))' (W^(1/2) D W^(-1/2))
    Eigen::MatrixXd a = sw.asDiagonal() * dm * sw.cwiseInverse().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
    e_ = eig.eigenvalues().cwiseMax(0.0);
    b2_ = (eig.eigenvectors().transpose() * ys).cwiseAbs2();
  }

  double operator()(double lambda) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < e_.size(); ++i) {
      const double le = lambda * e_(i);
      const double f = le / (1.0 + le);
      total += f * f * b2_(i);
    }
    return total / static_cast<double>(n_);
  }

 private:
  std::size_t n_;
  Eigen::VectorXd e_;
  Eigen::VectorXd b2_;
};

}  // namespace

double lambda_for_tolerance(const Profile& profile, SplineKind kind,
                            std::span<const double> weights, double tau) {
  if (kind == SplineKind::HermiteInterp)
    throw Error(ErrorCode::InvalidParams, "Hermite interpolants have no smoothing factor");
  if (!(tau >= 0.0) || !std::isfinite(tau))
    throw Error(ErrorCode::InvalidParams, "tolerance must be finite and >= 0");
  if (tau == 0.0) return 0.0;
  if (profile.size() < 3)
    throw Error(ErrorCode::TooFewPoints, "penalized fit needs at least three points");
  const double target = tau * tau;
  const KnotData d = knot_data(profile, weights);
  const bool positive = std::all_of(d.w.begin(), d.w.end(), [](double w) { return w > 0.0; });
  std::function<double(double)> criterion;
  if (positive) {
    criterion = [spectral = SpectralCriterion(d, kind)](double lambda) { return spectral(lambda); };
  } else {
    criterion = [&](double lambda) {
      return tolerance_criterion(fit_penalized(profile, kind, lambda, weights), profile, weights);
    };
  }
  const double f_hi = criterion(kLambdaMax);
  if (target >= f_hi)
    throw Error(ErrorCode::Unreachable, "tolerance " + std::to_string(tau) +
                                            " is not below the maximum-smoothing RMSE " +
                                            std::to_string(std::sqrt(f_hi)));
  // Bisect until the bracket is 1e-8 wide in log(lambda); the returned
  // end always satisfies the criterion.
  constexpr double log_width = 1e-8;
  constexpr int max_iter = 200;

  if (criterion(kLambdaMin) > target) {
    // Only very small tolerances land here; bisect linearly on [0, 1e-12].
    double a = 0.0;
    double b = kLambdaMin;
    for (int it = 0; it < max_iter && b - a > log_width * kLambdaMin; ++it) {
      const double mid = 0.5 * (a + b);
      if (criterion(mid) <= target) a = mid; else b = mid;
    }
    return a;
  }
  double lo = std::log(kLambdaMin);
  double hi = std::log(kLambdaMax);
  for (int it = 0; it < max_iter && hi - lo > log_width; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (criterion(std::exp(mid)) <= target) lo = mid; else hi = mid;
  }
  return std::exp(lo);
}

SplineFit fit_for_tolerance(const Profile& profile, SplineKind kind,
                            std::span<const double> weights, double tau, bool clamp_unreachable) {
  if (kind == SplineKind::HermiteInterp) return fit_hermite(profile);
  double lambda = 0.0;
  try {
    lambda = lambda_for_tolerance(profile, kind, weights, tau);
  } catch (const Error& e) {
    if (!clamp_unreachable || e.code() != ErrorCode::Unreachable) throw;
    lambda = kLambdaMax;
  }
  SplineFit fit = fit_penalized(profile, kind, lambda, weights);
  fit.set_tau(tau);
  return fit;
}

double weighted_rmse(const SplineFit& fit, const Profile& reference,
                     std::span<const double> weights) {
  const std::size_t n = reference.size();
  if (!weights.empty() && weights.size() != n)
    throw Error(ErrorCode::InvalidParams, "weights do not match the reference levels");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = reference[i].value - fit.evaluate(reference[i].pressure);
    total += r * r * (weights.empty() ? 1.0 / static_cast<double>(n) : weights[i]);
  }
  return std::sqrt(total);
}

}  // namespace sondeharm
