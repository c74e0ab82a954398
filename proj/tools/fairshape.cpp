// Command-line front end: closed-form sweeps, simulator sweeps, convexity
// scans, allocation scenarios and the trace pipeline. Everything is emitted
// as CSV with a comment line recording the invocation.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fairshape/allocator.hpp"
#include "fairshape/convexity.hpp"
#include "fairshape/csv.hpp"
#include "fairshape/model.hpp"
#include "fairshape/sim.hpp"
#include "fairshape/trace.hpp"

namespace {

using fairshape::csv::fmt;

constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitInfeasible = 3;

// Runs f(i) for i in [0, n) on a small worker pool; results are indexed so
// output order never depends on scheduling.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const unsigned workers = std::min<std::size_t>(threads, n);
  pool.reserve(workers);
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          f(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          error = e.what();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failed.load()) throw fairshape::DomainError(error);
}

struct Output {
  std::string path;  // empty = stdout

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(path);
    if (!out) {
      throw fairshape::DomainError("cannot write output file: " + path);
    }
    out << text;
  }
};

struct Range {
  double from = 0.0;
  double to = 0.0;
  double step = 1.0;

  std::vector<double> values() const {
    std::vector<double> out;
    for (double v = from; v <= to + 1e-12; v += step) out.push_back(v);
    return out;
  }
};

// --- model ------------------------------------------------------------

struct ModelArgs {
  double p = 0.3;
  double tau = 0.0;
  double g = -1.0, g_from = -1.0, g_to = -1.0, g_step = 1.0;
  double c = -1.0, c_from = -1.0, c_to = -1.0, c_step = 0.01;
  Output out;
};

int run_model(const ModelArgs& args, const std::string& invocation) {
  std::ostringstream body;
  body << invocation << '\n';
  if (args.c >= 0.0 || args.c_from >= 0.0) {
    body << "p,c,expected_queue,mean_wait,dummy_rate\n";
    std::vector<double> cs;
    if (args.c >= 0.0) {
      cs.push_back(args.c);
    } else {
      cs = Range{args.c_from, args.c_to, args.c_step}.values();
    }
    std::size_t rows = 0;
    for (double c : cs) {
      if (c <= args.p || c > 1.0) continue;
      const double eq = std::max(
          (2.0 * args.p - c) * (1.0 - args.p) / (2.0 * (c - args.p)), 0.0);
      body << fmt(args.p) << ',' << fmt(c) << ',' << fmt(eq) << ','
           << fmt(fairshape::mean_waiting_time_relaxed(args.p, c)) << ','
           << fmt(c - args.p) << '\n';
      ++rows;
    }
    if (rows == 0) {
      throw fairshape::StabilityError(
          "no stable duty cycle in the requested range");
    }
  } else {
    if (args.tau < 1.0) {
      throw fairshape::DomainError("--tau is required in integer mode");
    }
    double from = args.g, to = args.g;
    if (args.g < 0.0) {
      if (args.g_from < 0.0 || args.g_to < 0.0) {
        throw fairshape::DomainError("pass --g or --g-from/--g-to");
      }
      from = args.g_from;
      to = args.g_to;
    }
    body << "p,g,tau,c,expected_queue,mean_wait,dummy_rate\n";
    std::size_t rows = 0, skipped = 0;
    for (double g : Range{from, to, args.g_step}.values()) {
      if (!fairshape::stability_check(args.p, g, args.tau)) {
        ++skipped;
        continue;
      }
      const fairshape::ShaperParams params{args.p, g, args.tau, 1.0};
      const fairshape::ShaperDerived derived = fairshape::derive(params);
      body << fmt(args.p) << ',' << fmt(g) << ',' << fmt(args.tau) << ','
           << fmt(params.duty_cycle()) << ',' << fmt(derived.expected_queue)
           << ',' << fmt(derived.mean_wait) << ',' << fmt(derived.dummy_rate)
           << '\n';
      ++rows;
    }
    if (rows == 0) {
      throw fairshape::StabilityError(
          "unstable shaper: every requested g satisfies g <= p * tau");
    }
    if (skipped > 0) {
      body << "# omitted " << skipped << " unstable point(s)\n";
    }
  }
  args.out.write(body.str());
  return 0;
}

// --- simulate ----------------------------------------------------------

struct SimulateArgs {
  double p = 0.3;
  double tau = 100.0;
  double g = -1.0, g_from = -1.0, g_to = -1.0, g_step = 1.0;
  std::int64_t cycles = 1000;
  std::int64_t warmup = -1;
  std::uint64_t seed = 1;
  unsigned threads = std::thread::hardware_concurrency();
  Output out;
};

int run_simulate(const SimulateArgs& args, const std::string& invocation) {
  double from = args.g, to = args.g;
  if (args.g < 0.0) {
    if (args.g_from < 0.0 || args.g_to < 0.0) {
      throw fairshape::DomainError("pass --g or --g-from/--g-to");
    }
    from = args.g_from;
    to = args.g_to;
  }
  const std::vector<double> gs = Range{from, to, args.g_step}.values();
  if (gs.empty()) {
    throw fairshape::DomainError("empty g range");
  }

  std::vector<fairshape::SimConfig> configs(gs.size());
  std::vector<fairshape::QueueStats> stats(gs.size());
  for (std::size_t i = 0; i < gs.size(); ++i) {
    configs[i].params = {args.p, gs[i], args.tau, 1.0};
    configs[i].n_cycles = args.cycles;
    configs[i].warmup_cycles = args.warmup;
    configs[i].seed = args.seed + i;  // one stream per sweep point
  }
  parallel_for(gs.size(), std::max(1u, args.threads),
               [&](std::size_t i) { stats[i] = simulate(configs[i]); });

  std::ostringstream body;
  body << invocation << '\n'
       << fairshape::queue_stats_csv_header()
       << ",model_wait,model_queue,model_dummy\n";
  for (std::size_t i = 0; i < gs.size(); ++i) {
    body << queue_stats_csv_row(configs[i], stats[i]) << ',';
    if (stats[i].stable && args.p > 0.0) {
      body << fmt(fairshape::mean_waiting_time(args.p, gs[i], args.tau)) << ','
           << fmt(fairshape::miller_queue_estimate(args.p, gs[i], args.tau)
                      .value)
           << ',' << fmt(fairshape::dummy_rate(args.p, gs[i], args.tau));
    } else {
      body << "nan,nan,nan";
    }
    body << '\n';
  }
  args.out.write(body.str());
  return 0;
}

// --- convexity -----------------------------------------------------------

struct ConvexityArgs {
  std::size_t grid_n = 50;
  double p = -1.0;
  double c = -1.0;
  Output out;
};

int run_convexity(const ConvexityArgs& args, const std::string& invocation) {
  std::ostringstream body;
  body << invocation << '\n' << "p,c,w_pp,w_cc,w_pc,min_eig\n";
  fairshape::ConvexitySummary summary;
  if (args.p >= 0.0 && args.c >= 0.0) {
    summary = fairshape::scan_convexity({{args.p, args.c}});
  } else {
    summary = fairshape::scan_convexity(fairshape::convexity_grid(args.grid_n));
  }
  for (const fairshape::ConvexityRow& row : summary.rows) {
    body << fmt(row.p) << ',' << fmt(row.c) << ',' << fmt(row.w_pp) << ','
         << fmt(row.w_cc) << ',' << fmt(row.w_pc) << ','
         << fmt(row.min_eigenvalue) << '\n';
  }
  args.out.write(body.str());
  std::cerr << "points=" << summary.n_points
            << " min_w_pp=" << fmt(summary.min_w_pp)
            << " min_w_cc=" << fmt(summary.min_w_cc)
            << " indefinite_fraction=" << fmt(summary.indefinite_fraction)
            << '\n';
  return 0;
}

// --- allocate ------------------------------------------------------------

struct AllocateArgs {
  std::string scenario;
  std::string sweep;  // "sigma<flow-id>=from:to[:step]"
  fairshape::SolverOptions options;
  unsigned threads = std::thread::hardware_concurrency();
  Output out;
};

struct SweepSpec {
  std::string flow_id;
  Range range;
};

SweepSpec parse_sweep(const std::string& text) {
  const std::size_t eq = text.find('=');
  if (text.rfind("sigma", 0) != 0 || eq == std::string::npos || eq <= 5) {
    throw fairshape::DomainError(
        "sweep must look like sigma<flow-id>=from:to[:step]");
  }
  SweepSpec spec;
  spec.flow_id = text.substr(5, eq - 5);
  std::string rest = text.substr(eq + 1);
  std::replace(rest.begin(), rest.end(), ':', ' ');
  std::istringstream fields(rest);
  if (!(fields >> spec.range.from >> spec.range.to)) {
    throw fairshape::DomainError("bad sweep range: " + text);
  }
  if (!(fields >> spec.range.step)) spec.range.step = 1.0;
  return spec;
}

int run_allocate(const AllocateArgs& args, const std::string& invocation) {
  const std::vector<fairshape::FlowSpec> base =
      fairshape::load_scenario(args.scenario);
  const std::string stem =
      std::filesystem::path(args.scenario).stem().string();

  std::vector<std::string> labels;
  std::vector<std::vector<fairshape::FlowSpec>> cases;
  if (args.sweep.empty()) {
    labels.push_back(stem);
    cases.push_back(base);
  } else {
    const SweepSpec spec = parse_sweep(args.sweep);
    const auto target =
        std::find_if(base.begin(), base.end(), [&](const auto& flow) {
          return flow.id == spec.flow_id;
        });
    if (target == base.end()) {
      throw fairshape::DomainError("sweep flow id not in scenario: " +
                                   spec.flow_id);
    }
    for (double sigma : spec.range.values()) {
      std::vector<fairshape::FlowSpec> flows = base;
      flows[static_cast<std::size_t>(target - base.begin())].sigma = sigma;
      labels.push_back(stem + "@sigma" + spec.flow_id + "=" + fmt(sigma));
      cases.push_back(std::move(flows));
    }
  }

  std::vector<fairshape::AllocationResult> results(cases.size());
  parallel_for(cases.size(), std::max(1u, args.threads), [&](std::size_t i) {
    results[i] = fairshape::solve_allocation(cases[i], args.options);
  });

  std::ostringstream body;
  body << invocation << '\n'
       << "scenario,flow,p_star,d_star,w_f,U,converged,feasible\n";
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& result = results[i];
    for (std::size_t f = 0; f < cases[i].size(); ++f) {
      body << labels[i] << ',' << cases[i][f].id << ','
           << fmt(result.p_star[f]) << ',' << fmt(result.d_star[f]) << ','
           << fmt(result.waits[f]) << ',' << fmt(result.objective) << ','
           << (result.converged ? '1' : '0') << ','
           << (result.feasible ? '1' : '0') << '\n';
    }
  }
  args.out.write(body.str());
  return 0;
}

// --- trace -----------------------------------------------------------------

struct TraceArgs {
  int synthetic = 0;
  std::uint64_t seed = 42;
  double duration = 30.0;
  std::vector<std::string> inputs;
  double slot = 0.01;
  std::int64_t g = 5;
  std::int64_t tau = 10;
  double window = 0.2;
  std::string matrix_path;
  std::string shapes_path;
  std::string dump_dir;
  Output out;
};

int run_trace(const TraceArgs& args, const std::string& invocation) {
  std::vector<fairshape::PacketTrace> traces;
  if (args.synthetic > 0) {
    traces = fairshape::synthetic_corpus(
        {args.synthetic, args.duration, args.seed});
  } else if (!args.inputs.empty()) {
    for (const std::string& path : args.inputs) {
      traces.push_back(fairshape::load_trace_csv(path));
    }
  } else {
    throw fairshape::DomainError("pass --synthetic N or --input files");
  }

  if (!args.dump_dir.empty()) {
    std::filesystem::create_directories(args.dump_dir);
    for (const fairshape::PacketTrace& trace : traces) {
      fairshape::save_trace_csv(
          trace, (std::filesystem::path(args.dump_dir) /
                  (trace.label + ".csv"))
                     .string());
    }
  }

  const fairshape::CorpusReport report =
      fairshape::corpus_report(traces, args.slot, args.g, args.tau,
                               args.window);

  std::ostringstream body;
  body << invocation << '\n' << "variant,mean_distance,variance\n";
  body << "unmodified," << fmt(report.unmodified.mean) << ','
       << fmt(report.unmodified.variance) << '\n';
  body << "slotted," << fmt(report.slotted.mean) << ','
       << fmt(report.slotted.variance) << '\n';
  body << "shaped," << fmt(report.shaped.mean) << ','
       << fmt(report.shaped.variance) << '\n';
  args.out.write(body.str());

  if (!args.matrix_path.empty()) {
    std::ostringstream matrix;
    matrix << invocation << '\n' << "variant,a,b,distance\n";
    const auto emit = [&](const char* variant,
                          const std::vector<std::vector<double>>& m) {
      for (std::size_t i = 0; i < traces.size(); ++i) {
        for (std::size_t j = i + 1; j < traces.size(); ++j) {
          matrix << variant << ',' << traces[i].label << ','
                 << traces[j].label << ',' << fmt(m[i][j]) << '\n';
        }
      }
    };
    emit("unmodified", report.unmodified_matrix);
    emit("slotted", report.slotted_matrix);
    emit("shaped", report.shaped_matrix);
    Output{args.matrix_path}.write(matrix.str());
  }

  if (!args.shapes_path.empty()) {
    std::ostringstream shapes;
    shapes << invocation << '\n'
           << "label,original_duration,shaped_duration,original_count,"
              "real_count,dummy_count,session_slots,mean_buffer_delay\n";
    for (const fairshape::PacketTrace& trace : traces) {
      const fairshape::ShapeReport r =
          fairshape::shape_trace(trace, args.slot, args.g, args.tau).report;
      shapes << trace.label << ',' << fmt(r.original_duration) << ','
             << fmt(r.shaped_duration) << ',' << r.original_count << ','
             << r.real_count << ',' << r.dummy_count << ','
             << r.session_slots << ',' << fmt(r.mean_buffer_delay) << '\n';
    }
    Output{args.shapes_path}.write(shapes.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"on-off traffic shaping: model, simulate, analyse, allocate"};
  app.require_subcommand(1);

  ModelArgs model_args;
  auto* model = app.add_subcommand("model", "closed-form shaper sweeps");
  model->add_option("--p", model_args.p, "arrival probability per slot");
  model->add_option("--tau", model_args.tau, "cycle length in slots");
  model->add_option("--g", model_args.g, "on-slots per cycle");
  model->add_option("--g-from", model_args.g_from);
  model->add_option("--g-to", model_args.g_to);
  model->add_option("--g-step", model_args.g_step);
  model->add_option("--c", model_args.c, "relaxed duty cycle");
  model->add_option("--c-from", model_args.c_from);
  model->add_option("--c-to", model_args.c_to);
  model->add_option("--c-step", model_args.c_step);
  model->add_option("-o,--out", model_args.out.path, "output CSV path");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "slot-exact shaper runs");
  simulate->add_option("--p", sim_args.p, "arrival probability per slot");
  simulate->add_option("--tau", sim_args.tau, "cycle length in slots");
  simulate->add_option("--g", sim_args.g, "on-slots per cycle");
  simulate->add_option("--g-from", sim_args.g_from);
  simulate->add_option("--g-to", sim_args.g_to);
  simulate->add_option("--g-step", sim_args.g_step);
  simulate->add_option("--cycles", sim_args.cycles, "cycles per run");
  simulate->add_option("--warmup", sim_args.warmup,
                       "warmup cycles (-1 = 10%)");
  simulate->add_option("--seed", sim_args.seed);
  simulate->add_option("--threads", sim_args.threads);
  simulate->add_option("-o,--out", sim_args.out.path);

  ConvexityArgs convexity_args;
  auto* convexity =
      app.add_subcommand("convexity", "curvature scan of the delay surface");
  convexity->add_option("--grid-n", convexity_args.grid_n,
                        "points per axis of the scan grid");
  convexity->add_option("--p", convexity_args.p, "single-point mode");
  convexity->add_option("--c", convexity_args.c, "single-point mode");
  convexity->add_option("-o,--out", convexity_args.out.path);

  AllocateArgs alloc_args;
  auto* allocate =
      app.add_subcommand("allocate", "proportional-fair rate allocation");
  allocate->add_option("--scenario", alloc_args.scenario, "flow list file")
      ->required();
  allocate->add_option("--sweep", alloc_args.sweep,
                       "sigma<flow-id>=from:to[:step]");
  allocate->add_option("--step-size", alloc_args.options.step_size);
  allocate->add_option("--inner-iters", alloc_args.options.inner_iters);
  allocate->add_option("--outer-iters", alloc_args.options.outer_iters);
  allocate->add_option("--epsilon-d", alloc_args.options.epsilon_d);
  allocate->add_option("--tolerance", alloc_args.options.tolerance);
  allocate->add_option("--threads", alloc_args.threads);
  allocate->add_option("-o,--out", alloc_args.out.path);

  TraceArgs trace_args;
  auto* trace = app.add_subcommand("trace", "trace shaping and distances");
  trace->add_option("--synthetic", trace_args.synthetic,
                    "generate this many synthetic traces");
  trace->add_option("--seed", trace_args.seed);
  trace->add_option("--duration", trace_args.duration);
  trace->add_option("--input", trace_args.inputs, "trace CSV files");
  trace->add_option("--slot", trace_args.slot, "slot duration, seconds");
  trace->add_option("--g", trace_args.g);
  trace->add_option("--tau", trace_args.tau);
  trace->add_option("--window", trace_args.window,
                    "binning window for distances, seconds");
  trace->add_option("--matrix", trace_args.matrix_path,
                    "per-pair distance CSV");
  trace->add_option("--shapes", trace_args.shapes_path,
                    "per-trace shaping report CSV");
  trace->add_option("--dump-dir", trace_args.dump_dir,
                    "write the trace corpus here");
  trace->add_option("-o,--out", trace_args.out.path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const std::string invocation = fairshape::csv::invocation_comment(argc, argv);
  try {
    if (model->parsed()) return run_model(model_args, invocation);
    if (simulate->parsed()) return run_simulate(sim_args, invocation);
    if (convexity->parsed()) return run_convexity(convexity_args, invocation);
    if (allocate->parsed()) return run_allocate(alloc_args, invocation);
    if (trace->parsed()) return run_trace(trace_args, invocation);
  } catch (const fairshape::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return 0;
}
