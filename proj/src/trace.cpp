#include "fairshape/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace fairshape {

namespace {

constexpr double kSlotEps = 1e-9;

std::int64_t slot_index(double t, double slot) {
  return static_cast<std::int64_t>(std::floor(t / slot + kSlotEps));
}

void require_trace(const PacketTrace& trace) {
  double prev = 0.0;
  for (double t : trace.timestamps) {
    if (!(t >= 0.0) || t < prev) {
      throw DomainError("trace timestamps must be non-negative and sorted");
    }
    prev = t;
  }
}

std::vector<double> bin_counts(const std::vector<double>& times,
                               double window) {
  std::vector<double> counts;
  const double origin = times.front();
  for (double t : times) {
    const auto idx = static_cast<std::size_t>(
        std::floor((t - origin) / window + kSlotEps));
    if (idx >= counts.size()) counts.resize(idx + 1, 0.0);
    counts[idx] += 1.0;
  }
  return counts;
}

double dtw_binned(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  double max_bin = 0.0;
  for (double x : a) max_bin = std::max(max_bin, x);
  for (double x : b) max_bin = std::max(max_bin, x);
  if (max_bin == 0.0) return 0.0;

  // Alongside the warped cost we track the minimum path length among the
  // optimal paths; costs are integer-valued so the equality tests below are
  // exact and the result is symmetric in its arguments.
  std::vector<std::vector<double>> cost(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<std::int64_t>> length(
      n, std::vector<std::int64_t>(m, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double step = std::fabs(a[i] - b[j]);
      if (i == 0 && j == 0) {
        cost[i][j] = step;
        length[i][j] = 1;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      if (i > 0 && j > 0) best = std::min(best, cost[i - 1][j - 1]);
      if (i > 0) best = std::min(best, cost[i - 1][j]);
      if (j > 0) best = std::min(best, cost[i][j - 1]);
      std::int64_t steps = std::numeric_limits<std::int64_t>::max();
      if (i > 0 && j > 0 && cost[i - 1][j - 1] == best) {
        steps = std::min(steps, length[i - 1][j - 1]);
      }
      if (i > 0 && cost[i - 1][j] == best) {
        steps = std::min(steps, length[i - 1][j]);
      }
      if (j > 0 && cost[i][j - 1] == best) {
        steps = std::min(steps, length[i][j - 1]);
      }
      cost[i][j] = best + step;
      length[i][j] = steps + 1;
    }
  }
  return cost[n - 1][m - 1] /
         (static_cast<double>(length[n - 1][m - 1]) * max_bin);
}

VariantStats pair_stats(const std::vector<std::vector<double>>& matrix) {
  VariantStats stats;
  std::vector<double> values;
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (std::size_t j = i + 1; j < matrix.size(); ++j) {
      values.push_back(matrix[i][j]);
    }
  }
  if (values.empty()) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.variance = ss / static_cast<double>(values.size() - 1);
  }
  return stats;
}

double draw_exponential(std::mt19937_64& gen, double mean) {
  const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  return -std::log(1.0 - u) * mean;
}

}  // namespace

PacketTrace slot_trace(const PacketTrace& trace, double slot) {
  if (!(slot > 0.0)) {
    throw DomainError("slot duration must be positive");
  }
  require_trace(trace);
  PacketTrace out;
  out.label = trace.label;
  out.timestamps.reserve(trace.timestamps.size());
  for (double t : trace.timestamps) {
    out.timestamps.push_back(static_cast<double>(slot_index(t, slot)) * slot);
  }
  return out;
}

ShapeOutput shape_trace(const PacketTrace& trace, double slot, std::int64_t g,
                        std::int64_t tau) {
  if (!(slot > 0.0)) {
    throw DomainError("slot duration must be positive");
  }
  if (g < 1 || tau < g) {
    throw DomainError("cycle must satisfy 1 <= g <= tau");
  }
  require_trace(trace);

  ShapeOutput out;
  const std::size_t n = trace.timestamps.size();
  out.report.original_count = static_cast<std::int64_t>(n);
  if (n == 0) return out;  // nothing to shape, no session opens

  std::vector<std::int64_t> arrivals(n);
  for (std::size_t i = 0; i < n; ++i) {
    arrivals[i] = slot_index(trace.timestamps[i], slot);
  }
  const std::int64_t last_arrival = arrivals.back();

  std::vector<std::int64_t> queue;  // FIFO of arrival slots
  std::size_t head = 0;
  std::size_t next_arrival = 0;
  std::int64_t delay_slots = 0;
  std::int64_t pos = 0;
  std::int64_t end_slot = 0;

  for (std::int64_t t = 0;; ++t) {
    while (next_arrival < n && arrivals[next_arrival] == t) {
      queue.push_back(arrivals[next_arrival]);
      ++next_arrival;
    }
    if (pos < g) {
      ShapedTransmission tx;
      tx.time = static_cast<double>(t) * slot;
      if (head < queue.size()) {
        tx.dummy = false;
        delay_slots += t - queue[head];
        ++head;
        ++out.report.real_count;
      } else {
        tx.dummy = true;
        ++out.report.dummy_count;
      }
      out.transmissions.push_back(tx);
    }
    if (next_arrival == n && head == queue.size() && t >= last_arrival) {
      end_slot = t;
      break;
    }
    if (++pos == tau) pos = 0;
  }

  out.report.session_slots = end_slot + 1;
  out.report.original_duration =
      trace.timestamps.back() - trace.timestamps.front();
  out.report.shaped_duration =
      out.transmissions.empty() ? 0.0 : out.transmissions.back().time;
  out.report.mean_buffer_delay =
      static_cast<double>(delay_slots) * slot / static_cast<double>(n);
  return out;
}

double dtw_distance(const PacketTrace& a, const PacketTrace& b,
                    double window) {
  if (a.timestamps.empty() || b.timestamps.empty()) {
    throw DomainError("distance requires non-empty traces");
  }
  if (!(window > 0.0)) {
    throw DomainError("window must be positive");
  }
  require_trace(a);
  require_trace(b);
  return dtw_binned(bin_counts(a.timestamps, window),
                    bin_counts(b.timestamps, window));
}

CorpusReport corpus_report(const std::vector<PacketTrace>& traces, double slot,
                           std::int64_t g, std::int64_t tau, double window) {
  if (traces.size() < 2) {
    throw DomainError("corpus statistics need at least two traces");
  }
  const std::size_t n = traces.size();

  std::vector<PacketTrace> slotted;
  std::vector<std::vector<double>> shaped_times(n);
  slotted.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    slotted.push_back(slot_trace(traces[i], slot));
    const ShapeOutput shaped = shape_trace(traces[i], slot, g, tau);
    shaped_times[i].reserve(shaped.transmissions.size());
    for (const ShapedTransmission& tx : shaped.transmissions) {
      shaped_times[i].push_back(tx.time);
    }
  }

  CorpusReport report;
  auto matrix = [n] {
    return std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0));
  };
  report.unmodified_matrix = matrix();
  report.slotted_matrix = matrix();
  report.shaped_matrix = matrix();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double du = dtw_distance(traces[i], traces[j], window);
      const double ds = dtw_distance(slotted[i], slotted[j], window);
      report.unmodified_matrix[i][j] = report.unmodified_matrix[j][i] = du;
      report.slotted_matrix[i][j] = report.slotted_matrix[j][i] = ds;

      // The adversary-visible pattern: transmission times only, cut to the
      // shorter session so the comparison is over a common horizon.
      const double horizon = std::min(shaped_times[i].back(),
                                      shaped_times[j].back());
      PacketTrace ta, tb;
      for (double t : shaped_times[i]) {
        if (t <= horizon) ta.timestamps.push_back(t);
      }
      for (double t : shaped_times[j]) {
        if (t <= horizon) tb.timestamps.push_back(t);
      }
      const double dq = dtw_distance(ta, tb, window);
      report.shaped_matrix[i][j] = report.shaped_matrix[j][i] = dq;
    }
  }
  report.unmodified = pair_stats(report.unmodified_matrix);
  report.slotted = pair_stats(report.slotted_matrix);
  report.shaped = pair_stats(report.shaped_matrix);
  return report;
}

std::vector<PacketTrace> synthetic_corpus(const CorpusParams& params) {
  if (params.n_traces < 1 || !(params.duration > 0.0)) {
    throw DomainError("corpus needs a positive trace count and duration");
  }
  std::vector<PacketTrace> corpus;
  corpus.reserve(static_cast<std::size_t>(params.n_traces));
  const int sparse_from = params.n_traces - params.n_traces / 4 - 1;
  for (int site = 0; site < params.n_traces; ++site) {
    std::mt19937_64 gen(params.seed ^
                        (0x9e3779b97f4a7c15ULL * (site + 1)));
    auto u = [&gen] {
      return static_cast<double>(gen() >> 11) * 0x1.0p-53;
    };
    const bool sparse = site >= sparse_from;
    const double burst_rate = sparse ? 0.10 + 0.10 * u() : 0.5 + 1.5 * u();
    const double burst_size = sparse ? 1.5 + 1.0 * u() : 3.0 + 9.0 * u();
    const double gap_mean = sparse ? 0.04 + 0.02 * u() : 0.003 + 0.02 * u();

    PacketTrace trace;
    char label[16];
    std::snprintf(label, sizeof(label), "site%02d", site);
    trace.label = label;

    double t = 0.05 * u();  // sessions open almost immediately
    while (t < params.duration) {
      const int count = 1 + std::min<int>(
          14, static_cast<int>(draw_exponential(gen, burst_size - 1.0)));
      double pkt = t;
      for (int k = 0; k < count && pkt < params.duration; ++k) {
        trace.timestamps.push_back(pkt);
        pkt += draw_exponential(gen, gap_mean);
      }
      t += draw_exponential(gen, 1.0 / burst_rate);
    }
    if (trace.timestamps.empty()) {
      trace.timestamps.push_back(0.1 * params.duration);
    }
    std::sort(trace.timestamps.begin(), trace.timestamps.end());
    corpus.push_back(std::move(trace));
  }
  return corpus;
}

PacketTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DomainError("cannot open trace file: " + path);
  }
  PacketTrace trace;
  trace.label = std::filesystem::path(path).stem().string();
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    double t = 0.0;
    if (fields >> t) {
      trace.timestamps.push_back(t);
    } else if (!first && !line.empty()) {
      throw DomainError("bad line in trace file: " + path);
    }
    first = false;
  }
  require_trace(trace);
  return trace;
}

void save_trace_csv(const PacketTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw DomainError("cannot write trace file: " + path);
  }
  out << "timestamp\n";
  char buf[40];
  for (double t : trace.timestamps) {
    std::snprintf(buf, sizeof(buf), "%.9f\n", t);
    out << buf;
  }
}

}  // namespace fairshape
