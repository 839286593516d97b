#pragma once

// Independent reference implementations used only by the tests. Nothing in
// here calls into the library's numerical code.

#include <functional>
#include <vector>

namespace oracle {

/// Cox-de Boor B-spline basis of `degree` on the clamped knot vector built
/// from `breaks` (ascending). Returns the values (deriv = 0) or derivatives
/// (deriv = 1, 2) of every basis function at x.
std::vector<double> bspline_basis(const std::vector<double>& breaks, int degree, double x,
                                  int deriv = 0);

/// Penalized fit via explicit dense normal equations (Z'WZ + lambda P) c = Z'W y
/// in 50-digit arithmetic, where Z is the Cox-de Boor basis at the data and P the
/// weighted outer product of second derivatives at the data.
///
/// degree 1: s'' at interior knots is the second divided difference of the
///   knot values (zero at the ends).
/// degree 3: natural cubic spline, imposed as s''(x_0) = s''(x_{N-1}) = 0
///   through a bordered (KKT) system.
///
/// Returns the fitted values at the knots.
std::vector<double> penalized_fit_values(const std::vector<double>& x, const std::vector<double>& y,
                                         const std::vector<double>& w, double lambda, int degree);

/// Recursive adaptive Simpson quadrature.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 60);

/// Ordinary weighted least squares line y ~ a + b x, returns fitted values.
std::vector<double> weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                                  const std::vector<double>& w);

}  // namespace oracle
