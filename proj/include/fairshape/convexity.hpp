#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "fairshape/model.hpp"

namespace fairshape {

// The waiting-time surface is not differentiable across c = 2p.
class KinkError : public std::domain_error {
 public:
  explicit KinkError(const std::string& what) : std::domain_error(what) {}
};

// Second-order curvature of the relaxed waiting time at one point.
struct CurvatureReport {
  double w_pp = 0.0;
  double w_cc = 0.0;
  double w_pc = 0.0;
  bool clamped = false;  // zero-backlog branch (c > 2p)
  bool hessian_psd = false;
  std::array<double, 2> eigenvalues{0.0, 0.0};  // ascending
};

struct ConvexityRow {
  double p = 0.0;
  double c = 0.0;
  double w_pp = 0.0;
  double w_cc = 0.0;
  double w_pc = 0.0;
  double min_eigenvalue = 0.0;
};

struct ConvexitySummary {
  double min_w_pp = 0.0;
  double min_w_cc = 0.0;
  std::size_t indefinite_points = 0;
  std::size_t n_points = 0;
  double indefinite_fraction = 0.0;
  std::vector<ConvexityRow> rows;
};

// Eigenvalue below -1e-10 counts as indefinite.
inline constexpr double kPsdTolerance = 1e-10;

// Closed-form second derivatives on the branch selected by sign(c - 2p).
// For c > 2p:
//   w_pp = (1-c)/(c(1-p)^3), w_cc = 1/(c^3(1-p)), w_pc = -1/(2c^2(1-p)^2)
// For c < 2p:
//   w_pp = (1-c)[1/(c-p)^3 - 1/p^3 + 1/(c(1-p)^3)]
//   w_cc = (1-p)/(c-p)^3 + 1/(c^3(1-p))
//   w_pc = -[(2-p-c)/(c-p)^3 + 1/p^2 + 1/(c^2(1-p)^2)] / 2
CurvatureReport second_derivatives(double p, double c);

// Central differences of mean_waiting_time_relaxed with the given step.
// The full stencil must stay inside the domain and on one branch; a stencil
// touching or crossing c = 2p raises KinkError.
CurvatureReport finite_difference_hessian(double p, double c, double step);

// Evaluates second_derivatives over a point set and aggregates minima and
// the fraction of points with an indefinite Hessian.
ConvexitySummary scan_convexity(
    const std::vector<std::pair<double, double>>& grid);

// Uniform n-by-n grid over p in [0.05, 0.9], c in (p + 0.02, 1], with
// near-kink points dropped.
std::vector<std::pair<double, double>> convexity_grid(std::size_t n);

}  // namespace fairshape
