#include "fairshape/convexity.hpp"

#include <cmath>
#include <limits>

namespace fairshape {

namespace {

void require_domain(double p, double c) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw DomainError("arrival probability must lie in (0, 1)");
  }
  if (!(c > p) || !(c <= 1.0)) {
    throw DomainError("duty cycle must lie in (p, 1]");
  }
}

void fill_eigen(CurvatureReport& report) {
  const double mid = 0.5 * (report.w_pp + report.w_cc);
  const double radius =
      std::hypot(0.5 * (report.w_pp - report.w_cc), report.w_pc);
  report.eigenvalues = {mid - radius, mid + radius};
  report.hessian_psd = report.eigenvalues[0] >= -kPsdTolerance;
}

double relaxed_wait(double p, double c) {
  return mean_waiting_time_relaxed(p, c);
}

}  // namespace

CurvatureReport second_derivatives(double p, double c) {
  require_domain(p, c);
  if (std::fabs(c - 2.0 * p) < 1e-12) {
    throw KinkError("waiting time is not differentiable at c = 2p");
  }
  CurvatureReport report;
  report.clamped = c > 2.0 * p;
  const double q = 1.0 - p;
  if (report.clamped) {
    report.w_pp = (1.0 - c) / (c * q * q * q);
    report.w_cc = 1.0 / (c * c * c * q);
    report.w_pc = -1.0 / (2.0 * c * c * q * q);
  } else {
    const double u = c - p;
    const double u3 = u * u * u;
    report.w_pp =
        (1.0 - c) * (1.0 / u3 - 1.0 / (p * p * p) + 1.0 / (c * q * q * q));
    report.w_cc = q / u3 + 1.0 / (c * c * c * q);
    report.w_pc = -0.5 * ((2.0 - p - c) / u3 + 1.0 / (p * p) +
                          1.0 / (c * c * q * q));
  }
  fill_eigen(report);
  return report;
}

CurvatureReport finite_difference_hessian(double p, double c, double step) {
  require_domain(p, c);
  if (!(step > 0.0)) {
    throw DomainError("step must be positive");
  }
  const double h = step;
  if (!(p - h > 0.0) || !(p + h < 1.0) || !(c + h <= 1.0) ||
      !(c - h > p + h)) {
    throw DomainError("finite-difference stencil leaves the domain");
  }
  // The cross stencil shifts c - 2p by up to 3h; every evaluation point
  // must stay strictly on one side of the kink.
  if (std::fabs(c - 2.0 * p) <= 3.0 * h) {
    throw KinkError("finite-difference stencil straddles c = 2p");
  }

  const double w0 = relaxed_wait(p, c);
  CurvatureReport report;
  report.clamped = c > 2.0 * p;
  report.w_pp =
      (relaxed_wait(p + h, c) - 2.0 * w0 + relaxed_wait(p - h, c)) / (h * h);
  report.w_cc =
      (relaxed_wait(p, c + h) - 2.0 * w0 + relaxed_wait(p, c - h)) / (h * h);
  report.w_pc = (relaxed_wait(p + h, c + h) - relaxed_wait(p + h, c - h) -
                 relaxed_wait(p - h, c + h) + relaxed_wait(p - h, c - h)) /
                (4.0 * h * h);
  fill_eigen(report);
  return report;
}

ConvexitySummary scan_convexity(
    const std::vector<std::pair<double, double>>& grid) {
  ConvexitySummary summary;
  summary.min_w_pp = std::numeric_limits<double>::infinity();
  summary.min_w_cc = std::numeric_limits<double>::infinity();
  summary.rows.reserve(grid.size());
  for (const auto& [p, c] : grid) {
    const CurvatureReport report = second_derivatives(p, c);
    summary.min_w_pp = std::min(summary.min_w_pp, report.w_pp);
    summary.min_w_cc = std::min(summary.min_w_cc, report.w_cc);
    if (!report.hessian_psd) ++summary.indefinite_points;
    summary.rows.push_back({p, c, report.w_pp, report.w_cc, report.w_pc,
                            report.eigenvalues[0]});
  }
  summary.n_points = grid.size();
  summary.indefinite_fraction =
      grid.empty() ? 0.0
                   : static_cast<double>(summary.indefinite_points) /
                         static_cast<double>(grid.size());
  return summary;
}

std::vector<std::pair<double, double>> convexity_grid(std::size_t n) {
  if (n < 2) {
    throw DomainError("grid needs at least two points per axis");
  }
  std::vector<std::pair<double, double>> grid;
  grid.reserve(n * n);
  const double p_lo = 0.05;
  const double p_hi = 0.9;
  for (std::size_t i = 0; i < n; ++i) {
    const double p =
        p_lo + (p_hi - p_lo) * static_cast<double>(i) /
                   static_cast<double>(n - 1);
    const double c_lo = p + 0.02;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = c_lo + (1.0 - c_lo) * static_cast<double>(j) /
                                  static_cast<double>(n - 1);
      if (std::fabs(c - 2.0 * p) < 1e-6) continue;
      grid.emplace_back(p, c);
    }
  }
  return grid;
}

}  // namespace fairshape
