#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fairshape/model.hpp"

namespace fairshape {

// The constraint set admits no strictly feasible point.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what)
      : std::runtime_error(what) {}
};

struct FlowSpec {
  std::string id;
  double sigma = 10.0;      // mean delay deadline, slots
  double psi = 1.0;         // physical transmit rate (capacity share unit)
  bool is_private = true;   // shaped flow with a positive dummy budget
};

// Knobs of the alternating solver. step_size is the base subgradient step,
// decayed as 1/sqrt(t) over the global inner-iteration count.
struct SolverOptions {
  double step_size = 0.05;
  int inner_iters = 5000;
  int outer_iters = 50;
  double epsilon_d = 1e-4;       // dummy-rate floor standing in for d > 0
  double tolerance = 1e-6;       // stop when the objective moves less
  double feasibility_tol = 1e-4; // slack allowed by the final feasibility check
};

// One dual variable per constraint family, shared by both alternating
// phases and projected onto the non-negative orthant after every step.
struct Multipliers {
  std::vector<double> delay;        // per flow, delay deadline (private only)
  double network = 0.0;             // shared-link usage
  std::vector<double> rate_upper;   // p_f <= 1
  std::vector<double> rate_lower;   // p_f >= 0
  std::vector<double> dummy_lower;  // d_f >= 0
};

struct FeasibilityReport {
  bool feasible = false;
  double network_usage = 0.0;
  std::vector<double> waits;  // per flow; zero for non-private flows
  std::vector<std::string> violations;
};

struct AllocationResult {
  std::vector<double> p_star;
  std::vector<double> d_star;
  std::vector<double> waits;
  Multipliers multipliers;
  std::vector<double> objective_trace;  // one entry per outer round
  double objective = 0.0;
  bool feasible = false;
  bool converged = false;
  int outer_rounds = 0;
};

struct GridSearchResult {
  std::vector<double> p;
  std::vector<double> d;
  double objective = 0.0;
  bool found = false;
};

// Box used for the information rates during iteration.
inline constexpr double kRateFloor = 1e-4;
inline constexpr double kRateCeil = 1.0 - 1e-6;

// Sum of -log(p_f).
double evaluate_objective(const std::vector<double>& p);

// Shaping wait of one flow; non-private flows transmit on the full cycle
// and incur no shaping wait.
double flow_wait(const FlowSpec& flow, double p, double d);

// Verifies, within tol: per-flow delay deadlines (private flows), aggregate
// usage sum (p_f + d_f)/psi_f <= 1, the [0,1] boxes, d_f = 0 for
// non-private flows and d_f >= min_private_dummy > 0 for private ones.
FeasibilityReport check_feasible(const std::vector<double>& p,
                                 const std::vector<double>& d,
                                 const std::vector<FlowSpec>& flows,
                                 double tol,
                                 double min_private_dummy = 0.0);

// One projected subgradient step on the rates with dummies fixed, plus the
// projected ascent step on the multipliers. Gradient per flow:
//   -1/p_f + lambda_delay_f dw/dp + lambda_net/psi_f + lambda_up - lambda_lo
void subgradient_step_p(std::vector<double>& p, const std::vector<double>& d,
                        Multipliers& m, const std::vector<FlowSpec>& flows,
                        double alpha);

// Counterpart step on the dummy rates with rates fixed. Gradient per
// private flow: lambda_delay_f dw/dd + lambda_net/psi_f - lambda_dummy_f.
// Non-private flows stay at d = 0.
void subgradient_step_d(const std::vector<double>& p, std::vector<double>& d,
                        Multipliers& m, const std::vector<FlowSpec>& flows,
                        double alpha, double epsilon_d);

// Alternating solve: inner subgradient loops on p and on d per outer round,
// stopping once the objective change per round drops below tolerance.
AllocationResult solve_allocation(const std::vector<FlowSpec>& flows,
                                  const SolverOptions& options = {});

// Exhaustive grid search over (p, d) for one or two flows, refined by
// zooming the grid around the incumbent. Independent of the subgradient
// path; used to bound its suboptimality.
GridSearchResult brute_force_small(const std::vector<FlowSpec>& flows,
                                   int grid_resolution, int refine_rounds = 3,
                                   double epsilon_d = 1e-4);

// Scenario text format: one flow per line, "id sigma psi private_flag",
// '#' starts a comment.
std::vector<FlowSpec> parse_scenario(std::istream& in);
std::vector<FlowSpec> load_scenario(const std::string& path);

}  // namespace fairshape
