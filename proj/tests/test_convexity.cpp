#include <cmath>
#include <random>

#include "doctest.h"
#include "fairshape/convexity.hpp"

using namespace fairshape;

TEST_CASE("closed forms on the zero-backlog branch") {
  const CurvatureReport report = second_derivatives(0.1, 0.5);
  CHECK(report.clamped);
  CHECK(report.w_pp == doctest::Approx(1.371742112482853).epsilon(1e-12));
  CHECK(report.w_cc == doctest::Approx(8.88888888888889).epsilon(1e-12));
  CHECK(report.w_pc == doctest::Approx(-2.4691358024691357).epsilon(1e-12));
  CHECK(report.w_pp > 0.0);
  CHECK(report.w_cc > 0.0);
}

TEST_CASE("closed forms on the backlog branch") {
  const CurvatureReport report = second_derivatives(0.3, 0.4);
  CHECK_FALSE(report.clamped);
  CHECK(report.w_pp == doctest::Approx(582.1509556203426).epsilon(1e-10));
  CHECK(report.w_cc == doctest::Approx(722.3214285714278).epsilon(1e-10));
  CHECK(report.w_pc == doctest::Approx(-661.9331065759629).epsilon(1e-10));
  CHECK(report.w_pp > 0.0);
  CHECK(report.w_cc > 0.0);
}

TEST_CASE("the counterexample point has an indefinite Hessian") {
  const CurvatureReport report = second_derivatives(0.5, 0.9);
  CHECK_FALSE(report.hessian_psd);
  CHECK(report.eigenvalues[0] ==
        doctest::Approx(-4.078009458171554).epsilon(1e-9));
  CHECK(report.eigenvalues[0] < 0.0);

  const CurvatureReport fd = finite_difference_hessian(0.5, 0.9, 1e-4);
  CHECK_FALSE(fd.hessian_psd);
  CHECK(fd.eigenvalues[0] < 0.0);
}

TEST_CASE("kink and domain guards") {
  CHECK_THROWS_AS(second_derivatives(0.25, 0.5), KinkError);
  CHECK_THROWS_AS(second_derivatives(0.5, 0.4), DomainError);
  CHECK_THROWS_AS(second_derivatives(0.0, 0.5), DomainError);
  // 0.9 - 2 * 0.45 = 0 sits inside the stencil at step 0.1.
  CHECK_THROWS_AS(finite_difference_hessian(0.45, 0.9, 0.1), KinkError);
  CHECK_THROWS_AS(finite_difference_hessian(0.1, 0.999, 0.01), DomainError);
}

TEST_CASE("finite differences confirm both branches") {
  const CurvatureReport fd = finite_difference_hessian(0.1, 0.5, 1e-4);
  CHECK(fd.w_pp == doctest::Approx(1.371742112482853).epsilon(1e-3));

  std::mt19937 gen(12345);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double step = 1e-4;
  int checked = 0;
  while (checked < 100) {
    const double p = 0.02 + 0.93 * unit(gen);
    const double c = p + 0.02 + (1.0 - p - 0.022) * unit(gen);
    if (c > 1.0 - 2.0 * step) continue;
    if (std::fabs(c - 2.0 * p) < 0.01) continue;
    const CurvatureReport analytic = second_derivatives(p, c);
    const CurvatureReport fd_report = finite_difference_hessian(p, c, step);
    CHECK(fd_report.w_pp == doctest::Approx(analytic.w_pp).epsilon(1e-3));
    CHECK(fd_report.w_cc == doctest::Approx(analytic.w_cc).epsilon(1e-3));
    CHECK(fd_report.w_pc == doctest::Approx(analytic.w_pc).epsilon(1e-3));
    CHECK(analytic.w_pp > 0.0);
    CHECK(analytic.w_cc > 0.0);
    ++checked;
  }
}

TEST_CASE("wait is convex along fixed-dummy-rate lines") {
  // Discrete second differences of p -> w(p, p + d) are non-negative.
  for (double d : {0.05, 0.15, 0.3}) {
    const double lo = 0.02;
    const double hi = 1.0 - d - 0.02;
    const int n = 200;
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) {
      const double p = lo + (hi - lo) * i / (n - 1);
      w[i] = mean_waiting_time_relaxed(p, p + d);
    }
    for (int i = 1; i + 1 < n; ++i) {
      CHECK(w[i + 1] - 2.0 * w[i] + w[i - 1] >= -1e-9);
    }
  }
}

TEST_CASE("grid scan: positive per-coordinate curvature, indefinite spots") {
  auto grid = convexity_grid(50);
  grid.emplace_back(0.5, 0.9);
  const ConvexitySummary summary = scan_convexity(grid);
  CHECK(summary.n_points == grid.size());
  CHECK(summary.min_w_pp > 0.0);
  CHECK(summary.min_w_cc > 0.0);
  CHECK(summary.indefinite_fraction > 0.0);
  CHECK(summary.rows.size() == grid.size());
}

TEST_CASE("zero-backlog region has negative cross curvature throughout") {
  for (double p = 0.05; p < 0.45; p += 0.05) {
    for (double c = 2.0 * p + 0.05; c <= 1.0 + 1e-12; c += 0.05) {
      const CurvatureReport report = second_derivatives(p, std::min(c, 1.0));
      CHECK(report.clamped);
      CHECK(report.w_pp > 0.0);
      CHECK(report.w_cc > 0.0);
      CHECK(report.w_pc < 0.0);
    }
  }
}
