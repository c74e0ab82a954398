#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairshape/model.hpp"

namespace fairshape {

struct SimConfig {
  ShaperParams params;              // p in [0,1), integer-valued g and tau
  std::int64_t n_cycles = 1000;     // total cycles simulated
  std::int64_t warmup_cycles = -1;  // discarded before measurement; -1 = 10%
  std::uint64_t seed = 1;
};

// Empirical counterpart of the closed-form model. All statistics are taken
// over the post-warmup window; the output-pattern digest covers the whole
// run. served + dummies equals the number of measured on-slots.
struct QueueStats {
  double mean_wait = 0.0;                 // slots, real packets only
  double mean_end_of_green_queue = 0.0;   // packets
  double dummy_fraction = 0.0;            // dummy transmissions per slot
  double mean_queue = 0.0;                // end-of-slot average occupancy
  std::int64_t served = 0;
  std::int64_t dummies = 0;
  std::int64_t total_slots = 0;           // measured slots
  std::uint64_t output_pattern_hash = 0;  // digest of the transmit sequence
  bool stable = false;
};

// Slot-exact run of the on-off shaper with Bernoulli(p) arrivals.
// Per slot: the arrival (if any) is processed first, then an on-slot
// transmits the oldest queued packet, else the fresh arrival (wait 0),
// else a dummy. Off-slot arrivals join the queue. Unstable configurations
// are permitted and flagged.
QueueStats simulate(const SimConfig& config);

// Transmit indicator per slot for t < horizon, recorded from the same slot
// loop as simulate(). By construction it depends only on (g, tau, horizon).
std::vector<std::uint8_t> output_pattern(const SimConfig& config,
                                         std::int64_t horizon);

std::uint64_t pattern_hash(const std::vector<std::uint8_t>& pattern);

// CSV row schema used by the sweep front end.
std::string queue_stats_csv_header();
std::string queue_stats_csv_row(const SimConfig& config,
                                const QueueStats& stats);

}  // namespace fairshape
