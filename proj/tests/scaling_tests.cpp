#include <doctest.h>

#include <cmath>
#include <vector>

#include "rotorlab/model.hpp"
#include "rotorlab/rng.hpp"
#include "rotorlab/scaling.hpp"

using namespace rotorlab;

namespace {

double uniform(SplitMix64& g, double lo, double hi) {
  return lo + (hi - lo) * ((g() >> 11) * 0x1.0p-53);
}

WidthSeries series_from(double (*s2_of_t)(double), long t_max, long step) {
  WidthSeries s;
  for (long t = 0; t <= t_max; t += step) {
    const double v = s2_of_t(static_cast<double>(t));
    s.samples.push_back({t, std::sqrt(v), std::sqrt(v)});
  }
  return s;
}

}  // namespace

TEST_CASE("mean free path squared equals the summed quasi-linear coefficients") {
  SplitMix64 g(2718);
  GridSpec grid(128);
  for (int draw = 0; draw < 25; ++draw) {
    SystemParams p{uniform(g, 0, 3),   uniform(g, 0, 3),   uniform(g, 0, 3),
                   uniform(g, 0, 3),   uniform(g, 0.5, 2), uniform(g, 0.5, 2)};
    const double l = mean_free_path(p, grid);
    const auto d = quasi_linear_coefficients(p);
    CHECK(l * l == doctest::Approx(d.d1_0 + d.d2_0).epsilon(1e-8));
  }
}

TEST_CASE("single-rotor mean free path reduces to lambda over sqrt 2") {
  SystemParams p;
  p.lambda1 = 0.5;
  const double l = mean_free_path(p, GridSpec(128));
  CHECK(l == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("mean free path at the tabulated coupling points") {
  GridSpec grid(256);
  CHECK(mean_free_path({0.5, 0.5, 3.0, 3.0, 1.0, 1.0}, grid) ==
        doctest::Approx(4.77).epsilon(0.0021));
  CHECK(mean_free_path({0.5, 0.5, 1.0, 3.0, 1.0, 1.0}, grid) ==
        doctest::Approx(3.57).epsilon(0.0029));
  CHECK(mean_free_path({0.5, 0.5, 3.0, 1.0, 1.0, 1.0}, grid) ==
        doctest::Approx(2.96).epsilon(0.0034));
  CHECK(mean_free_path({0.25, 0.25, 3.0, 3.0, 1.0, 1.0}, grid) ==
        doctest::Approx(4.75).epsilon(0.0022));
}

TEST_CASE("mean free path refuses a grid that cannot hold the spread") {
  CHECK_THROWS_AS(mean_free_path({0.5, 0.5, 3.0, 3.0, 1.0, 1.0}, GridSpec(8)),
                  GridError);
}

TEST_CASE("recurrence trajectory matches a hand-stepped evaluation") {
  const double l = 4.0, c = 2.0, a = 0.5;
  const long dt = 300;
  const auto s2 = scaling_recurrence(l, c, a, dt, 3);
  REQUIRE(s2.size() == 4);
  CHECK(s2[0] == doctest::Approx(16.0));
  double expect = 16.0;
  for (int k = 1; k <= 3; ++k) {
    const double s = std::sqrt(expect);
    expect += dt * (c * l - a * std::log(s / l));
    CHECK(s2[static_cast<std::size_t>(k)] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("fit recovers the generating parameters from synthetic data") {
  const double l = 4.0, c = 2.0, a = 0.5;
  const long dt = 300;
  const int blocks = 40;
  const auto s2 = scaling_recurrence(l, c, a, dt, blocks);
  WidthSeries series;
  for (int k = 0; k <= blocks; ++k) {
    const double s = std::sqrt(s2[static_cast<std::size_t>(k)]);
    series.samples.push_back({k * dt, s, s});
  }
  const auto fit = fit_scaling(series, l, dt);
  CHECK(std::abs(fit.c - c) < 1e-4);
  CHECK(std::abs(fit.a - a) < 1e-4);
  CHECK(fit.residual < 1e-10);
  CHECK(fit.b == doctest::Approx(fit.c / fit.a));
  CHECK(fit.lambda_big == doctest::Approx(saturation_length(l, fit.b)));
  CHECK(fit.delta_t == dt);

  // the fitted point zeroes the block diffusion rate exactly at S = Lambda
  const double rate = fit.c * fit.l - fit.a * std::log(fit.lambda_big / fit.l);
  CHECK(std::abs(rate) < 1e-9);
}

TEST_CASE("fit is insensitive to the mean free path used for generation") {
  // same (c, a), different l: both recovered (self-consistency, not scale
  // invariance of the data itself)
  for (double l : {3.0, 6.0}) {
    const auto s2 = scaling_recurrence(l, 2.0, 0.5, 200, 30);
    WidthSeries series;
    for (int k = 0; k <= 30; ++k) {
      const double s = std::sqrt(s2[static_cast<std::size_t>(k)]);
      series.samples.push_back({k * 200, s, s});
    }
    const auto fit = fit_scaling(series, l, 200);
    CHECK(std::abs(fit.c - 2.0) < 1e-3);
    CHECK(std::abs(fit.a - 0.5) < 1e-3);
  }
}

TEST_CASE("fit resamples off-boundary series at the nearest recorded sample") {
  const double l = 4.0;
  const auto s2 = scaling_recurrence(l, 2.0, 0.5, 300, 15);
  WidthSeries series;
  // dense samples every 10 kicks, values interpolated linearly between blocks
  for (long t = 0; t <= 15 * 300; t += 10) {
    const double x = static_cast<double>(t) / 300.0;
    const auto k = static_cast<std::size_t>(x);
    const double frac = x - static_cast<double>(k);
    const double v = k + 1 < s2.size() ? s2[k] * (1 - frac) + s2[k + 1] * frac : s2[k];
    series.samples.push_back({t, std::sqrt(v), std::sqrt(v)});
  }
  const auto fit = fit_scaling(series, l, 300);
  CHECK(std::abs(fit.c - 2.0) < 1e-3);
  CHECK(std::abs(fit.a - 0.5) < 1e-3);
}

TEST_CASE("degenerate fits are reported, short series are usage errors") {
  WidthSeries linear;  // no log correction at all: a -> 0 boundary
  for (int k = 0; k <= 30; ++k) {
    const double s2 = 16.0 + 300.0 * 8.0 * k;
    linear.samples.push_back({k * 300, std::sqrt(s2), std::sqrt(s2)});
  }
  CHECK_THROWS_AS(fit_scaling(linear, 4.0, 300), FitError);

  WidthSeries flat;  // saturated below l: no admissible growth model
  for (int k = 0; k <= 30; ++k) flat.samples.push_back({k * 300, 1.0, 1.0});
  CHECK_THROWS_AS(fit_scaling(flat, 4.0, 300), FitError);

  WidthSeries tiny;
  for (int k = 0; k <= 5; ++k) tiny.samples.push_back({k * 300, 4.0, 4.0});
  CHECK_THROWS_AS(fit_scaling(tiny, 4.0, 300), UsageError);
  CHECK_THROWS_AS(fit_scaling(linear, -1.0, 300), UsageError);
  CHECK_THROWS_AS(fit_scaling(linear, 4.0, 0), UsageError);
}

TEST_CASE("saturation length") {
  CHECK(saturation_length(3.0, 0.0) == doctest::Approx(3.0));
  CHECK(saturation_length(4.77, 1.16) == doctest::Approx(1207.0).epsilon(0.01));
  CHECK(saturation_length(4.75, 0.79) == doctest::Approx(202.0).epsilon(0.01));
}

TEST_CASE("classifier labels a saturating series as localized") {
  const auto series = series_from(
      [](double t) { return 1.6 + 500.0 * (1.0 - std::exp(-t / 400.0)); }, 5000, 10);
  const auto result = classify_regime(series, 11.375);
  CHECK(result.label == RegimeLabel::Localized);
  CHECK(result.diagnostics.rho < 0.05);
  CHECK(result.diagnostics.oscillation_index < 0.1);
  CHECK(to_string(result.label) == "Localized");
}

TEST_CASE("classifier labels steady growth as quasi-diffusive") {
  const auto series =
      series_from([](double t) { return 1.6 + 3.0 * t; }, 5000, 10);
  const auto result = classify_regime(series, 11.375);
  CHECK(result.label == RegimeLabel::QuasiDiffusive);
  CHECK(result.diagnostics.rho > 0.5);
  CHECK(result.diagnostics.monotonicity_index >= 0.95);
}

TEST_CASE("classifier labels late oscillation as intermediate") {
  const auto series = series_from(
      [](double t) {
        if (t < 2500.0) return 1.6 + 3.0 * t;
        return 7501.6 + 2500.0 * std::sin((t - 2500.0) / 150.0);
      },
      5000, 10);
  const auto result = classify_regime(series, 11.375);
  CHECK(result.label == RegimeLabel::Intermediate);
}

TEST_CASE("classifier thresholds are honored") {
  const auto series =
      series_from([](double t) { return 1.6 + 3.0 * t; }, 5000, 10);
  ClassifierThresholds loose;
  loose.rho_localized = 1.5;  // everything below 1.5 now counts as saturated
  loose.oscillation_max = 10.0;
  const auto result = classify_regime(series, 11.375, loose);
  CHECK(result.label == RegimeLabel::Localized);
}

TEST_CASE("classifier rejects series that are too short") {
  const auto short_span =
      series_from([](double t) { return 1.6 + 3.0 * t; }, 1500, 10);
  CHECK_THROWS_AS(classify_regime(short_span, 1.0), UsageError);

  const auto few_samples =
      series_from([](double t) { return 1.6 + 3.0 * t; }, 4000, 200);
  CHECK_THROWS_AS(classify_regime(few_samples, 1.0), UsageError);
}
