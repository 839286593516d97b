#include <doctest.h>

#include <cmath>
#include <random>

#include "sondeharm/error.hpp"
#include "sondeharm/harmonize.hpp"
#include "sondeharm/synth.hpp"

using namespace sondeharm;

namespace {

SynthConfig closure_config(int pairs, std::size_t levels, std::uint64_t seed = 11) {
  SynthConfig c = default_synth_config(Variable::Temperature);
  c.seed = seed;
  c.family = TruthFamily::PiecewiseLinearKinks;
  c.pairs = pairs;
  c.gruan_pairs = 0;
  c.noise_sd_raob = 0.0;
  c.noise_sd_gruan = 0.0;
  c.iasi_noise_sd = 0.0;
  c.kernel_truth = smooth_kernel_profile(log_uniform_grid(957.0, 11.0, levels), 20.0, 80.0, 0.25, -0.25);
  return c;
}

struct Fixture {
  SynthSet data;
  std::vector<SplineFit> fits;
  BiasProfile bias;
  HarmonizationProblem problem;

  Fixture(const SynthConfig& c, HarmonizeOptions o)
      : data(generate_set(c)),
        fits(fit_all(data.set, SplineKind::LinearB, 0.0)),
        problem(data.set, fits, bias, std::move(o)) {}
};

HarmonizeOptions quick_options(int restarts = 10) {
  HarmonizeOptions o;
  o.restarts = restarts;
  o.seed = 5;
  return o;
}

}  // namespace

TEST_CASE("level objective vanishes at the generating kernel and is non-negative") {
  const SynthConfig c = closure_config(12, 10);
  Fixture f(c, quick_options());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sig(5.0, 150.0), shp(-0.5, 0.5);
  for (std::size_t j = 0; j < f.problem.levels(); ++j) {
    const GevParams truth = c.kernel_truth.params[j];
    const double at_truth = f.problem.level_objective(j, truth, 2.0);
    CHECK(at_truth < 1e-20);
    CHECK(at_truth >= 0.0);
    CHECK(f.problem.level_objective(j, {sig(rng), shp(rng)}, 2.0) >= 0.0);
  }
}

TEST_CASE("generating kernel beats a 50 percent wider one in 100 noiseless trials") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> sig(20.0, 80.0), shp(-0.3, 0.3);
  int wins = 0;
  for (int t = 0; t < 100; ++t) {
    SynthConfig c = closure_config(4, 3, 100 + static_cast<std::uint64_t>(t));
    const GevParams truth{sig(rng), shp(rng)};
    c.kernel_truth.params.assign(c.kernel_truth.iasi_grid.size(), truth);
    Fixture f(c, quick_options());
    const std::size_t j = static_cast<std::size_t>(t % 3);
    const GevParams wide{1.5 * truth.sigma, truth.xi};
    if (f.problem.level_objective(j, truth, 2.0) < f.problem.level_objective(j, wide, 2.0)) ++wins;
  }
  CHECK(wins == 100);
}

TEST_CASE("tabulated convolution agrees with adaptive quadrature") {
  SynthConfig c = closure_config(10, 8);
  c.iasi_noise_sd = 0.2;
  Fixture f(c, quick_options());
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> sig(10.0, 150.0), shp(-0.4, 0.4);
  for (int t = 0; t < 40; ++t) {
    const std::size_t j = static_cast<std::size_t>(t) % f.problem.levels();
    const GevParams g{sig(rng), shp(rng)};
    const double fast = f.problem.weighted_sse(j, g, 2.0);
    const double accurate = f.problem.level_objective(j, g, 2.0);
    CHECK(fast == doctest::Approx(accurate).epsilon(1e-4));
  }
}

TEST_CASE("first level recovers a constant kernel from noiseless data") {
  SynthConfig c = closure_config(40, 6);
  c.kernel_truth.params.assign(c.kernel_truth.iasi_grid.size(), GevParams{30.0, 0.2});
  Fixture f(c, quick_options(20));
  const std::size_t top = f.problem.levels() - 1;
  const FirstLevelResult r = fit_first_level(f.problem, top);
  CHECK(std::abs(r.params.sigma - 30.0) < 0.05 * 30.0);
  CHECK(std::abs(r.params.xi - 0.2) < 0.05);
  CHECK(r.restarts_used == 20);
  CHECK(r.best_restart >= 0);
}

TEST_CASE("more restarts never give a worse first level, and runs are reproducible") {
  SynthConfig c = closure_config(20, 5);
  c.iasi_noise_sd = 0.1;
  Fixture one(c, quick_options(1));
  Fixture many(c, quick_options(100));
  const std::size_t top = one.problem.levels() - 1;
  const FirstLevelResult r1 = fit_first_level(one.problem, top);
  const FirstLevelResult r100 = fit_first_level(many.problem, top);
  CHECK(r100.misfit <= r1.misfit);
  const FirstLevelResult again = fit_first_level(many.problem, top);
  CHECK(again.params == r100.params);
  CHECK(again.misfit == r100.misfit);
  CHECK(again.best_restart == r100.best_restart);
}

TEST_CASE("all restarts failing is reported") {
  SynthConfig c = closure_config(5, 4);
  HarmonizeOptions o = quick_options(5);
  o.init_sigma_lo = 1e-9;
  o.init_sigma_hi = 1e-9;
  o.xi_bound = 1e-3;
  Fixture f(c, o);
  CHECK_THROWS_AS(fit_first_level(f.problem, 3), Error);
  try {
    fit_first_level(f.problem, 3);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllRestartsFailed);
  }
}

TEST_CASE("penalty limits freeze or release the random walk") {
  SynthConfig c = closure_config(20, 8);
  c.iasi_noise_sd = 0.1;
  Fixture f(c, quick_options());
  const std::size_t j = 4;
  const GevParams prev{55.0, -0.05};

  const std::array<double, 2> tight = {1e-12, 1e-12};
  const LevelStep frozen = fit_level_j(f.problem, j, prev, &tight);
  CHECK(frozen.params.sigma == doctest::Approx(prev.sigma).epsilon(1e-6));
  CHECK(std::abs(frozen.params.xi - prev.xi) < 1e-6);

  const std::array<double, 2> loose = {1e12, 1e12};
  const LevelStep released = fit_level_j(f.problem, j, prev, &loose);
  const LevelStep free = fit_level_j(f.problem, j, prev, nullptr);
  CHECK(released.params.sigma == doctest::Approx(free.params.sigma).epsilon(1e-4));
  CHECK(std::abs(released.params.xi - free.params.xi) < 1e-4);
  CHECK(free.penalty == 0.0);

  for (const std::array<double, 2>& sz : {std::array<double, 2>{1.0, 1e-3}, std::array<double, 2>{25.0, 0.01}}) {
    const LevelStep s = fit_level_j(f.problem, j, prev, &sz);
    CHECK(s.objective() <= f.problem.misfit(j, prev));
    CHECK(s.penalty == doctest::Approx(step_penalty(prev, s.params, sz)));
  }
}

TEST_CASE("innovation variances from a parameter path") {
  const std::vector<GevParams> constant(10, GevParams{40.0, 0.1});
  const auto floor = sigma_zeta_from_path(constant);
  CHECK(floor[0] == 1e-8);
  CHECK(floor[1] == 1e-8);
  CHECK(sigma_zeta_from_path(std::span<const GevParams>(constant.data(), 1))[0] == 1e-8);

  std::mt19937_64 rng(21);
  std::normal_distribution<double> ds(0.0, 2.0), dx(0.0, 0.1);
  const int reps = 500;
  int within_s = 0, within_x = 0;
  double mean_s = 0.0, mean_x = 0.0;
  for (int r = 0; r < reps; ++r) {
    std::vector<GevParams> path{{100.0, 0.0}};
    for (int j = 1; j < 74; ++j) path.push_back({path.back().sigma + ds(rng), path.back().xi + dx(rng)});
    const auto v = sigma_zeta_from_path(path);
    CHECK(v[0] > 0.0);
    CHECK(v[1] > 0.0);
    within_s += std::abs(v[0] / 4.0 - 1.0) < 0.3;
    within_x += std::abs(v[1] / 0.01 - 1.0) < 0.3;
    mean_s += v[0] / reps;
    mean_x += v[1] / reps;
  }
  // sd of the estimate is sqrt(2/73), about 0.166 relative.
  CHECK(within_s >= 0.9 * reps);
  CHECK(within_x >= 0.9 * reps);
  CHECK(mean_s == doctest::Approx(4.0).epsilon(0.03));
  CHECK(mean_x == doctest::Approx(0.01).epsilon(0.03));
}

TEST_CASE("estimated innovation variances are positive and follow the unpenalized path") {
  SynthConfig c = closure_config(15, 6);
  Fixture f(c, quick_options());
  const std::size_t top = f.problem.levels() - 1;
  const SigmaZetaEstimate est = estimate_sigma_zeta(f.problem, c.kernel_truth.params[top]);
  REQUIRE(est.path.size() == f.problem.levels());
  CHECK(est.path.front() == c.kernel_truth.params[top]);
  CHECK(est.sigma_zeta[0] > 0.0);
  CHECK(est.sigma_zeta[1] > 0.0);
  CHECK_FALSE(est.degenerate);
  const auto direct = sigma_zeta_from_path(est.path);
  CHECK(est.sigma_zeta == direct);
}

TEST_CASE("harmonization recovers the generating kernel profile") {
  const SynthConfig c = closure_config(40, 12);
  Fixture f(c, quick_options(20));
  const HarmonizationResult r = harmonize(f.problem);
  REQUIRE(r.kernels.params.size() == 12);
  REQUIRE(r.smoothed_profiles.size() == 40);
  CHECK(r.smoothed_profiles[0].size() == 12);
  double mean_err = 0.0;
  int interior = 0;
  for (std::size_t j = 0; j < 12; ++j) {
    const GevParams t = c.kernel_truth.params[j];
    const GevParams e = r.kernels.params[j];
    CHECK(e.sigma > 0.0);
    CHECK(std::abs(e.xi) <= kDefaultXiBound);
    CHECK(std::isfinite(r.objective_per_level[j]));
    CHECK(r.border[j] == (j < 3 || j >= 9));
    if (r.border[j]) continue;
    CHECK(std::abs(e.sigma - t.sigma) < 0.05 * t.sigma);
    CHECK(std::abs(e.xi - t.xi) < 0.05);
    mean_err += std::abs(e.sigma - t.sigma) / t.sigma;
    ++interior;
  }
  CHECK(mean_err / interior < 0.1);
  CHECK(r.penalty_per_level[11] == 0.0);
  CHECK(r.restarts_used == 20);

  double total = 0.0;
  for (double v : r.objective_per_level) total += v;
  CHECK(profile_neg2_loglik(f.problem, r.kernels, r.direction) == doctest::Approx(total).epsilon(1e-12));

  for (std::size_t k = 0; k < 40; ++k)
    for (std::size_t j = 0; j < 12; ++j)
      CHECK(r.smoothed_profiles[k][j] == doctest::Approx(f.problem.iasi_value(k, j)).epsilon(1e-5));
}

TEST_CASE("iteration direction barely changes the estimates") {
  SynthConfig c = closure_config(30, 10);
  c.iasi_noise_sd = 0.05;
  HarmonizeOptions down = quick_options(10);
  HarmonizeOptions up = down;
  up.direction = IterationDirection::BottomUp;
  Fixture fd(c, down);
  Fixture fu(c, up);
  const HarmonizationResult a = harmonize(fd.problem);
  const HarmonizationResult b = harmonize(fu.problem);
  CHECK(b.direction == IterationDirection::BottomUp);
  CHECK(b.penalty_per_level[0] == 0.0);
  for (std::size_t j = 0; j < 10; ++j)
    CHECK(std::abs(a.kernels.params[j].sigma - b.kernels.params[j].sigma) < 0.1 * a.kernels.params[j].sigma);
}

TEST_CASE("harmonization is deterministic and runs with a single co-location") {
  SynthConfig c = closure_config(1, 6);
  c.iasi_noise_sd = 0.1;
  Fixture f(c, quick_options(5));
  const HarmonizationResult a = harmonize(f.problem);
  const HarmonizationResult b = harmonize(f.problem);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(std::isfinite(a.objective_per_level[j]));
    CHECK(a.kernels.params[j] == b.kernels.params[j]);
    CHECK(a.objective_per_level[j] == b.objective_per_level[j]);
  }
  CHECK(a.smoothed_profiles == b.smoothed_profiles);
}

TEST_CASE("harmonization inputs are validated") {
  CHECK(parse_iteration_direction("bottom_up") == IterationDirection::BottomUp);
  CHECK(to_string(IterationDirection::TopDown) == "top_down");
  CHECK_THROWS_AS(parse_iteration_direction("sideways"), Error);
  SynthConfig c = closure_config(3, 4);
  const SynthSet data = generate_set(c);
  const std::vector<SplineFit> fits = fit_all(data.set, SplineKind::LinearB, 0.0);
  const std::vector<SplineFit> short_fits(fits.begin(), fits.begin() + 2);
  const BiasProfile bias;
  CHECK_THROWS_AS(HarmonizationProblem(data.set, short_fits, bias), Error);
  HarmonizeOptions bad;
  bad.restarts = 0;
  const HarmonizationProblem p(data.set, fits, bias, bad);
  CHECK_THROWS_AS(fit_first_level(p, 0), Error);
}
