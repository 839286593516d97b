#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sondeharm {

struct NelderMeadOptions {
  /// Stop when the simplex diameter (max-norm from the best vertex) is below
  /// rel_tol * max(1, |x_best|).
  double rel_tol = 1e-6;
  int max_evals = 4000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Non-finite objective values count as +inf.
/// The initial simplex is x0 plus one vertex per coordinate offset by
/// steps[i]. Throws OptimFailed when every initial vertex is non-finite.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, std::span<const double> steps,
                             const NelderMeadOptions& opts = {});

}  // namespace sondeharm
