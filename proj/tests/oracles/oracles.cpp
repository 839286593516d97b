#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace oracle {

namespace {

// 50 significant digits: the normal equations square the condition number,
// which reaches 1e30 for closely spaced knots under heavy smoothing.
using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>, boost::multiprecision::et_off>;
using MatL = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

std::vector<double> clamped_knots(const std::vector<double>& breaks, int degree) {
  std::vector<double> t;
  for (int i = 0; i < degree; ++i) t.push_back(breaks.front());
  t.insert(t.end(), breaks.begin(), breaks.end());
  for (int i = 0; i < degree; ++i) t.push_back(breaks.back());
  return t;
}

// Value of B_{i,k} (order k = degree + 1) by the Cox-de Boor recursion.
template <class T>
T cox_de_boor(const std::vector<double>& t, int i, int k, double x) {
  if (k == 1) {
    const bool last = t[i + 1] == t.back() && x == t.back();
    if ((t[i] <= x && x < t[i + 1]) || (last && t[i] < t[i + 1])) return T(1);
    return T(0);
  }
  T out = 0;
  const T d1 = T(t[i + k - 1]) - T(t[i]);
  const T d2 = T(t[i + k]) - T(t[i + 1]);
  if (d1 > 0) out += (T(x) - T(t[i])) / d1 * cox_de_boor<T>(t, i, k - 1, x);
  if (d2 > 0) out += (T(t[i + k]) - T(x)) / d2 * cox_de_boor<T>(t, i + 1, k - 1, x);
  return out;
}

template <class T>
T cox_de_boor_deriv(const std::vector<double>& t, int i, int k, double x, int deriv) {
  if (deriv == 0) return cox_de_boor<T>(t, i, k, x);
  T out = 0;
  const T d1 = T(t[i + k - 1]) - T(t[i]);
  const T d2 = T(t[i + k]) - T(t[i + 1]);
  if (d1 > 0) out += T(k - 1) / d1 * cox_de_boor_deriv<T>(t, i, k - 1, x, deriv - 1);
  if (d2 > 0) out -= T(k - 1) / d2 * cox_de_boor_deriv<T>(t, i + 1, k - 1, x, deriv - 1);
  return out;
}

template <class T>
std::vector<T> basis_values(const std::vector<double>& breaks, int degree, double x, int deriv) {
  const auto t = clamped_knots(breaks, degree);
  const int n = static_cast<int>(breaks.size()) + degree - 1;
  std::vector<T> out(n);
  for (int i = 0; i < n; ++i) out[i] = cox_de_boor_deriv<T>(t, i, degree + 1, x, deriv);
  return out;
}

// f[x_a, ..., x_b] by the recursive divided-difference definition, as a
// coefficient vector over the knot values.
std::vector<Real> divided_difference(const std::vector<double>& x, int a, int b) {
  std::vector<Real> c(x.size(), Real(0));
  if (a == b) {
    c[a] = 1;
    return c;
  }
  const auto hi = divided_difference(x, a + 1, b);
  const auto lo = divided_difference(x, a, b - 1);
  const Real span = Real(x[b]) - Real(x[a]);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = (hi[i] - lo[i]) / span;
  return c;
}

}  // namespace

std::vector<double> bspline_basis(const std::vector<double>& breaks, int degree, double x,
                                  int deriv) {
  return basis_values<double>(breaks, degree, x, deriv);
}

std::vector<double> penalized_fit_values(const std::vector<double>& x, const std::vector<double>& y,
                                         const std::vector<double>& w, double lambda, int degree) {
  const int n = static_cast<int>(x.size());
  if (degree != 1 && degree != 3) throw std::invalid_argument("degree must be 1 or 3");
  const int nb = n + degree - 1;
  MatL z(n, nb);
  for (int j = 0; j < n; ++j) {
    const auto b = basis_values<Real>(x, degree, x[j], 0);
    for (int i = 0; i < nb; ++i) z(j, i) = b[i];
  }
  // Rows of the curvature functional at every data point, in basis coordinates.
  MatL d = MatL::Zero(n, nb);
  if (degree == 1) {
    // z is the identity for the hat basis, so knot values are the coefficients.
    for (int j = 1; j + 1 < n; ++j) {
      const auto dd = divided_difference(x, j - 1, j + 1);
      for (int i = 0; i < n; ++i) d(j, i) = 2 * dd[i];
    }
  } else {
    for (int j = 0; j < n; ++j) {
      const auto b2 = basis_values<Real>(x, degree, x[j], 2);
      for (int i = 0; i < nb; ++i) d(j, i) = b2[i];
    }
  }
  MatL wm = MatL::Zero(n, n);
  for (int j = 0; j < n; ++j) wm(j, j) = w[j];
  VecL yv(n);
  for (int j = 0; j < n; ++j) yv(j) = y[j];

  MatL a = z.transpose() * wm * z + Real(lambda) * d.transpose() * wm * d;
  VecL rhs = z.transpose() * wm * yv;
  VecL coef;
  if (degree == 1) {
    coef = a.fullPivLu().solve(rhs);
  } else {
    // Natural boundary: s''(x_0) = s''(x_{n-1}) = 0 as equality constraints.
    MatL kkt = MatL::Zero(nb + 2, nb + 2);
    kkt.topLeftCorner(nb, nb) = a;
    const auto c0 = basis_values<Real>(x, degree, x.front(), 2);
    const auto c1 = basis_values<Real>(x, degree, x.back(), 2);
    for (int i = 0; i < nb; ++i) {
      kkt(nb, i) = kkt(i, nb) = c0[i];
      kkt(nb + 1, i) = kkt(i, nb + 1) = c1[i];
    }
    VecL r = VecL::Zero(nb + 2);
    r.head(nb) = rhs;
    coef = kkt.fullPivLu().solve(r).head(nb);
  }
  VecL fitted = z * coef;
  std::vector<double> out(n);
  for (int j = 0; j < n; ++j) out[j] = static_cast<double>(fitted(j));
  return out;
}

namespace {
double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm)) throw std::domain_error("adaptive_simpson: non-finite integrand");
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const bool at_rounding = std::abs(delta) <= 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (depth <= 0 || at_rounding || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

std::vector<double> weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                                  const std::vector<double>& w) {
  long double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const long double mx = sx / sw;
  const long double my = sy / sw;
  const long double slope = (sxy / sw - mx * my) / (sxx / sw - mx * mx);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<double>(my + slope * (x[i] - mx));
  return out;
}

}  // namespace oracle
