#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sondeharm/core.hpp"

namespace testing_helpers {

inline sondeharm::Profile make_profile(const std::vector<double>& p, const std::vector<double>& v,
                                       std::vector<double> u = {},
                                       sondeharm::Instrument inst = sondeharm::Instrument::Raob,
                                       sondeharm::Variable var = sondeharm::Variable::Temperature) {
  if (u.empty()) u.assign(p.size(), 0.5);
  std::vector<sondeharm::Level> levels;
  for (std::size_t i = 0; i < p.size(); ++i) levels.push_back({p[i], v[i], u[i]});
  return sondeharm::Profile(inst, var, std::move(levels), "TEST", "2020-01-01T00:00:00Z");
}

/// n pressures in (top, bottom), log-uniform draws with a minimum relative gap,
/// ground to top.
inline std::vector<double> random_pressures(std::mt19937_64& rng, std::size_t n,
                                            double bottom = 1000.0, double top = 10.0) {
  std::uniform_real_distribution<double> u(std::log(top), std::log(bottom));
  for (;;) {
    std::vector<double> x(n);
    for (double& xi : x) xi = u(rng);
    std::sort(x.begin(), x.end());
    bool ok = true;
    for (std::size_t i = 1; i < n; ++i)
      if (x[i] - x[i - 1] < 0.2 * (std::log(bottom) - std::log(top)) / n) ok = false;
    if (!ok) continue;
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(x[n - 1 - i]);
    return p;
  }
}

}  // namespace testing_helpers
