#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairshape/model.hpp"

namespace fairshape {

struct PacketTrace {
  std::vector<double> timestamps;  // seconds, non-decreasing
  std::string label;
};

struct ShapeReport {
  double original_duration = 0.0;  // last - first raw timestamp, seconds
  double shaped_duration = 0.0;    // first to last transmission, seconds
  std::int64_t original_count = 0;
  std::int64_t real_count = 0;
  std::int64_t dummy_count = 0;
  std::int64_t session_slots = 0;  // slots from 0 through the drain slot
  double mean_buffer_delay = 0.0;  // seconds, relative to the slotted arrival
};

struct ShapedTransmission {
  double time = 0.0;
  bool dummy = false;
};

struct ShapeOutput {
  std::vector<ShapedTransmission> transmissions;
  ShapeReport report;
};

// Floors every timestamp to its slot boundary.
PacketTrace slot_trace(const PacketTrace& trace, double slot);

// Runs the on-off shaper over the trace: every on-slot from time 0 until
// the queue drains after the last arrival emits exactly one transmission,
// the oldest buffered packet if any, else a dummy. Packets are conserved
// in FIFO order; transmission times depend only on (slot, g, tau, horizon).
ShapeOutput shape_trace(const PacketTrace& trace, double slot, std::int64_t g,
                        std::int64_t tau);

// Normalised distance in [0, 1] between two traces: packet counts per
// `window` seconds (relative to each trace's first event) are aligned by
// dynamic time warping with |a-b| step costs, and the warped cost is
// divided by path length times the largest bin count. Symmetric, zero on
// identical traces.
double dtw_distance(const PacketTrace& a, const PacketTrace& b, double window);

struct VariantStats {
  double mean = 0.0;
  double variance = 0.0;  // sample variance over the pairwise distances
};

struct CorpusReport {
  VariantStats unmodified;
  VariantStats slotted;
  VariantStats shaped;
  std::vector<std::vector<double>> unmodified_matrix;
  std::vector<std::vector<double>> slotted_matrix;
  std::vector<std::vector<double>> shaped_matrix;
};

// Pairwise distance statistics for the raw traces, their slotted versions
// and their shaped transmission patterns. Shaped pairs are truncated to the
// shorter session before comparison.
CorpusReport corpus_report(const std::vector<PacketTrace>& traces, double slot,
                           std::int64_t g, std::int64_t tau, double window);

struct CorpusParams {
  int n_traces = 10;
  double duration = 30.0;  // seconds
  std::uint64_t seed = 42;
};

// Deterministic burst-structured test corpus. Sites carry distinct rate and
// gap signatures; the last quarter of the sites are sparse (well below one
// packet per hundred slots at a 10 ms slot).
std::vector<PacketTrace> synthetic_corpus(const CorpusParams& params);

// One timestamp per line; '#' comments and a non-numeric header are
// skipped. The label defaults to the file stem.
PacketTrace load_trace_csv(const std::string& path);
void save_trace_csv(const PacketTrace& trace, const std::string& path);

}  // namespace fairshape
