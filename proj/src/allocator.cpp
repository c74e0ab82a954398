#include "fairshape/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fairshape {

namespace {

void require_conformal(const std::vector<double>& p,
                       const std::vector<double>& d,
                       const std::vector<FlowSpec>& flows) {
  if (p.size() != flows.size() || d.size() != flows.size()) {
    throw DomainError("rate vectors must match the flow list");
  }
}

void require_flows(const std::vector<FlowSpec>& flows) {
  if (flows.empty()) {
    throw DomainError("flow list must not be empty");
  }
  for (const FlowSpec& flow : flows) {
    if (!(flow.sigma > 0.0)) {
      throw DomainError("flow '" + flow.id + "': sigma must be positive");
    }
    if (!(flow.psi > 0.0)) {
      throw DomainError("flow '" + flow.id + "': psi must be positive");
    }
  }
}

double network_usage(const std::vector<double>& p, const std::vector<double>& d,
                     const std::vector<FlowSpec>& flows) {
  double usage = 0.0;
  for (std::size_t f = 0; f < flows.size(); ++f) {
    usage += (p[f] + d[f]) / flows[f].psi;
  }
  return usage;
}

// dw/dp with the dummy rate held fixed; the duty cycle moves with p.
double wait_grad_p_fixed_d(double p, double d) {
  const WaitGradient grad = relaxed_wait_gradient(p, p + d);
  return grad.d_p + grad.d_c;
}

double wait_grad_d(double p, double d) {
  return relaxed_wait_gradient(p, p + d).d_c;
}

double project(double x) { return std::max(x, 0.0); }

// Smallest dummy rate in [lo, 1 - p] whose wait meets the deadline. The
// wait is strictly decreasing in d and reaches 0 at d = 1 - p, so the
// bisection target always exists.
double min_dummy_for_deadline(double p, double lo, double sigma) {
  const double hi_limit = 1.0 - p;
  double lo_d = std::min(lo, hi_limit);
  if (waiting_time_pd(p, lo_d) <= sigma) return lo_d;
  double hi_d = hi_limit;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo_d + hi_d);
    if (waiting_time_pd(p, mid) <= sigma) {
      hi_d = mid;
    } else {
      lo_d = mid;
    }
  }
  return hi_d;
}

// Pulls an iterate back onto the constraint set: lift dummy rates until
// deadlines hold, then rescale everything when the link is over-committed.
// The two fixes interact, so a few passes are run; residuals shrink fast.
void restore_feasibility(std::vector<double>& p, std::vector<double>& d,
                         const std::vector<FlowSpec>& flows, double epsilon_d) {
  for (int pass = 0; pass < 6; ++pass) {
    for (std::size_t f = 0; f < flows.size(); ++f) {
      if (!flows[f].is_private) {
        d[f] = 0.0;
        continue;
      }
      p[f] = std::clamp(p[f], kRateFloor, 1.0 - epsilon_d);
      d[f] = std::clamp(d[f], epsilon_d, 1.0 - p[f]);
      if (waiting_time_pd(p[f], d[f]) > flows[f].sigma) {
        d[f] = min_dummy_for_deadline(p[f], d[f], flows[f].sigma);
      }
    }
    const double usage = network_usage(p, d, flows);
    if (usage <= 1.0) return;
    const double scale = 1.0 / usage;
    for (std::size_t f = 0; f < flows.size(); ++f) {
      p[f] = std::max(kRateFloor, p[f] * scale);
      d[f] = flows[f].is_private ? std::max(epsilon_d, d[f] * scale) : 0.0;
    }
  }
}

}  // namespace

double evaluate_objective(const std::vector<double>& p) {
  double objective = 0.0;
  for (double rate : p) {
    if (!(rate > 0.0)) {
      throw DomainError("objective requires strictly positive rates");
    }
    objective -= std::log(rate);
  }
  return objective;
}

double flow_wait(const FlowSpec& flow, double p, double d) {
  if (!flow.is_private) return 0.0;
  return waiting_time_pd(p, d);
}

FeasibilityReport check_feasible(const std::vector<double>& p,
                                 const std::vector<double>& d,
                                 const std::vector<FlowSpec>& flows,
                                 double tol, double min_private_dummy) {
  require_conformal(p, d, flows);
  FeasibilityReport report;
  report.waits.assign(flows.size(), 0.0);
  report.network_usage = network_usage(p, d, flows);
  for (std::size_t f = 0; f < flows.size(); ++f) {
    const FlowSpec& flow = flows[f];
    if (p[f] < -tol || p[f] > 1.0 + tol) {
      report.violations.push_back("flow '" + flow.id +
                                  "': rate outside [0, 1]");
    }
    if (d[f] < -tol || d[f] > 1.0 + tol) {
      report.violations.push_back("flow '" + flow.id +
                                  "': dummy rate outside [0, 1]");
    }
    if (!flow.is_private) {
      if (std::fabs(d[f]) > tol) {
        report.violations.push_back("flow '" + flow.id +
                                    "': non-private flow sends dummies");
      }
      continue;
    }
    if (!(d[f] > 0.0) || !(p[f] > 0.0) || !(p[f] < 1.0) ||
        p[f] + d[f] > 1.0 + tol) {
      report.waits[f] = std::numeric_limits<double>::infinity();
      report.violations.push_back(
          "flow '" + flow.id +
          "': private flow needs p in (0,1), d > 0 and p + d <= 1");
      continue;
    }
    if (min_private_dummy > 0.0 && d[f] < min_private_dummy - tol) {
      report.violations.push_back("flow '" + flow.id +
                                  "': dummy rate below the configured floor");
    }
    report.waits[f] = waiting_time_pd(p[f], std::min(d[f], 1.0 - p[f]));
    if (report.waits[f] > flow.sigma + tol) {
      report.violations.push_back("flow '" + flow.id +
                                  "': delay deadline exceeded");
    }
  }
  if (report.network_usage > 1.0 + tol) {
    report.violations.push_back("network constraint exceeded: usage " +
                                std::to_string(report.network_usage));
  }
  report.feasible = report.violations.empty();
  return report;
}

void subgradient_step_p(std::vector<double>& p, const std::vector<double>& d,
                        Multipliers& m, const std::vector<FlowSpec>& flows,
                        double alpha) {
  require_conformal(p, d, flows);
  const std::size_t n = flows.size();
  const double usage = network_usage(p, d, flows);

  // Residuals are taken at the incoming iterate so the primal descent and
  // the dual ascent form one simultaneous update.
  std::vector<double> next(n);
  for (std::size_t f = 0; f < n; ++f) {
    const FlowSpec& flow = flows[f];
    double grad = -1.0 / p[f] + m.network / flow.psi + m.rate_upper[f] -
                  m.rate_lower[f];
    if (flow.is_private) {
      grad += m.delay[f] * wait_grad_p_fixed_d(p[f], d[f]);
    }
    const double hi = std::max(kRateFloor, std::min(kRateCeil, 1.0 - d[f]));
    next[f] = std::clamp(p[f] - alpha * grad, kRateFloor, hi);
  }
  for (std::size_t f = 0; f < n; ++f) {
    const FlowSpec& flow = flows[f];
    if (flow.is_private) {
      const double wait = waiting_time_pd(p[f], d[f]);
      m.delay[f] = project(m.delay[f] + alpha * (wait - flow.sigma));
    }
    m.rate_upper[f] = project(m.rate_upper[f] + alpha * (p[f] - 1.0));
    m.rate_lower[f] = project(m.rate_lower[f] + alpha * (-p[f]));
  }
  m.network = project(m.network + alpha * (usage - 1.0));
  p = std::move(next);
}

void subgradient_step_d(const std::vector<double>& p, std::vector<double>& d,
                        Multipliers& m, const std::vector<FlowSpec>& flows,
                        double alpha, double epsilon_d) {
  require_conformal(p, d, flows);
  const std::size_t n = flows.size();
  const double usage = network_usage(p, d, flows);

  std::vector<double> next(n, 0.0);
  for (std::size_t f = 0; f < n; ++f) {
    const FlowSpec& flow = flows[f];
    if (!flow.is_private) continue;  // pinned at d = 0
    const double grad = m.delay[f] * wait_grad_d(p[f], d[f]) +
                        m.network / flow.psi - m.dummy_lower[f];
    const double hi = std::max(epsilon_d, 1.0 - p[f]);
    next[f] = std::clamp(d[f] - alpha * grad, epsilon_d, hi);
  }
  for (std::size_t f = 0; f < n; ++f) {
    const FlowSpec& flow = flows[f];
    if (!flow.is_private) continue;
    const double wait = waiting_time_pd(p[f], d[f]);
    m.delay[f] = project(m.delay[f] + alpha * (wait - flow.sigma));
    m.dummy_lower[f] = project(m.dummy_lower[f] + alpha * (-d[f]));
  }
  m.network = project(m.network + alpha * (usage - 1.0));
  d = std::move(next);
}

AllocationResult solve_allocation(const std::vector<FlowSpec>& flows,
                                  const SolverOptions& options) {
  require_flows(flows);
  if (!(options.step_size > 0.0) || options.inner_iters < 1 ||
      options.outer_iters < 1 || !(options.epsilon_d > 0.0) ||
      !(options.tolerance > 0.0) || !(options.feasibility_tol > 0.0)) {
    throw DomainError("solver options must all be positive");
  }
  const std::size_t n = flows.size();

  // Existence of a strictly feasible point: each private flow needs a duty
  // cycle of at least 1/(2 sigma + 1) before its deadline is reachable, and
  // each flow needs room for a positive rate.
  double needed = 0.0;
  for (const FlowSpec& flow : flows) {
    const double c_min =
        flow.is_private
            ? std::max(1.0 / (2.0 * flow.sigma + 1.0),
                       kRateFloor + options.epsilon_d)
            : kRateFloor;
    needed += c_min / flow.psi;
  }
  if (needed >= 1.0) {
    throw InfeasibleError(
        "no feasible start: minimal duty cycles already exceed the link");
  }

  // Equal starting rates leaving half the link idle.
  double denom = 0.0;
  for (const FlowSpec& flow : flows) {
    denom += (flow.is_private ? 2.0 : 1.0) / flow.psi;
  }
  const double v = 0.5 / denom;
  std::vector<double> p(n), d(n);
  for (std::size_t f = 0; f < n; ++f) {
    p[f] = std::clamp(v, kRateFloor, kRateCeil);
    d[f] = flows[f].is_private ? std::max(v, options.epsilon_d) : 0.0;
  }
  restore_feasibility(p, d, flows, options.epsilon_d);

  Multipliers m;
  m.delay.assign(n, 0.0);
  m.rate_upper.assign(n, 0.0);
  m.rate_lower.assign(n, 0.0);
  m.dummy_lower.assign(n, 0.0);

  AllocationResult result;
  std::vector<double> sum(n);
  std::int64_t global_t = 0;
  double previous = std::numeric_limits<double>::infinity();

  for (int round = 0; round < options.outer_iters; ++round) {
    // Rate phase. The hand-off is the average of the tail half of the
    // iterates, which damps the residual oscillation of the primal-dual
    // dynamics without touching the update rule itself.
    std::fill(sum.begin(), sum.end(), 0.0);
    int averaged = 0;
    for (int t = 1; t <= options.inner_iters; ++t) {
      ++global_t;
      const double alpha =
          options.step_size / std::sqrt(static_cast<double>(global_t));
      subgradient_step_p(p, d, m, flows, alpha);
      if (2 * t > options.inner_iters) {
        for (std::size_t f = 0; f < n; ++f) sum[f] += p[f];
        ++averaged;
      }
    }
    if (averaged > 0) {
      for (std::size_t f = 0; f < n; ++f) p[f] = sum[f] / averaged;
    }

    // Dummy phase.
    std::fill(sum.begin(), sum.end(), 0.0);
    averaged = 0;
    for (int t = 1; t <= options.inner_iters; ++t) {
      ++global_t;
      const double alpha =
          options.step_size / std::sqrt(static_cast<double>(global_t));
      subgradient_step_d(p, d, m, flows, alpha, options.epsilon_d);
      if (2 * t > options.inner_iters) {
        for (std::size_t f = 0; f < n; ++f) sum[f] += d[f];
        ++averaged;
      }
    }
    if (averaged > 0) {
      for (std::size_t f = 0; f < n; ++f) {
        d[f] = flows[f].is_private ? sum[f] / averaged : 0.0;
      }
    }

    restore_feasibility(p, d, flows, options.epsilon_d);
    const double objective = evaluate_objective(p);
    result.objective_trace.push_back(objective);
    result.outer_rounds = round + 1;
    if (round > 0 && std::fabs(objective - previous) < options.tolerance) {
      result.converged = true;
      break;
    }
    previous = objective;
  }

  result.p_star = p;
  result.d_star = d;
  result.objective = evaluate_objective(p);
  result.waits.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    result.waits[f] = flow_wait(flows[f], p[f], d[f]);
  }
  result.multipliers = std::move(m);
  result.feasible = check_feasible(p, d, flows, options.feasibility_tol,
                                   options.epsilon_d)
                        .feasible;
  return result;
}

GridSearchResult brute_force_small(const std::vector<FlowSpec>& flows,
                                   int grid_resolution, int refine_rounds,
                                   double epsilon_d) {
  require_flows(flows);
  if (flows.size() > 2) {
    throw DomainError("exhaustive search is limited to two flows");
  }
  if (grid_resolution < 2 || refine_rounds < 0 || !(epsilon_d > 0.0)) {
    throw DomainError("bad grid search parameters");
  }
  const std::size_t n = flows.size();

  // Dimension layout: p for every flow, then d for every private flow.
  struct Dim {
    std::size_t flow;
    bool is_dummy;
    double global_lo, global_hi;
    double lo, hi;
  };
  std::vector<Dim> dims;
  for (std::size_t f = 0; f < n; ++f) {
    dims.push_back({f, false, kRateFloor, kRateCeil, kRateFloor, kRateCeil});
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (flows[f].is_private) {
      dims.push_back({f, true, epsilon_d, kRateCeil, epsilon_d, kRateCeil});
    }
  }

  GridSearchResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<double> best_coord(dims.size(), 0.0);

  std::vector<double> p(n), d(n);
  std::vector<int> idx(dims.size(), 0);
  std::vector<double> coord(dims.size(), 0.0);

  for (int round = 0; round <= refine_rounds; ++round) {
    std::fill(idx.begin(), idx.end(), 0);
    bool done = false;
    while (!done) {
      for (std::size_t k = 0; k < dims.size(); ++k) {
        const Dim& dim = dims[k];
        coord[k] = dim.lo + (dim.hi - dim.lo) * (idx[k] + 0.5) /
                                grid_resolution;
      }
      std::fill(d.begin(), d.end(), 0.0);
      for (std::size_t k = 0; k < dims.size(); ++k) {
        (dims[k].is_dummy ? d : p)[dims[k].flow] = coord[k];
      }
      bool feasible = true;
      double usage = 0.0;
      for (std::size_t f = 0; f < n && feasible; ++f) {
        usage += (p[f] + d[f]) / flows[f].psi;
        if (flows[f].is_private) {
          if (p[f] + d[f] > 1.0 ||
              waiting_time_pd(p[f], d[f]) > flows[f].sigma) {
            feasible = false;
          }
        }
      }
      if (feasible && usage <= 1.0) {
        const double objective = evaluate_objective(p);
        if (objective < best.objective) {
          best.objective = objective;
          best.p = p;
          best.d = d;
          best.found = true;
          best_coord = coord;
        }
      }
      // Odometer increment over the grid.
      std::size_t k = 0;
      while (k < dims.size() && ++idx[k] == grid_resolution) {
        idx[k] = 0;
        ++k;
      }
      done = k == dims.size();
    }
    if (!best.found) break;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      Dim& dim = dims[k];
      const double cell = (dim.hi - dim.lo) / grid_resolution;
      dim.lo = std::max(dim.global_lo, best_coord[k] - 2.0 * cell);
      dim.hi = std::min(dim.global_hi, best_coord[k] + 2.0 * cell);
    }
  }
  return best;
}

std::vector<FlowSpec> parse_scenario(std::istream& in) {
  std::vector<FlowSpec> flows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    FlowSpec flow;
    int private_flag = 0;
    if (!(fields >> flow.id)) continue;  // blank line
    if (!(fields >> flow.sigma >> flow.psi >> private_flag)) {
      throw DomainError("scenario line " + std::to_string(line_no) +
                        ": expected 'id sigma psi private_flag'");
    }
    flow.is_private = private_flag != 0;
    flows.push_back(std::move(flow));
  }
  require_flows(flows);
  return flows;
}

std::vector<FlowSpec> load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DomainError("cannot open scenario file: " + path);
  }
  return parse_scenario(in);
}

}  // namespace fairshape
