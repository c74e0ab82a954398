#include "fairshape/sim.hpp"

#include <cmath>
#include <random>

#include "fairshape/csv.hpp"

namespace fairshape {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline void fnv_step(std::uint64_t& h, std::uint8_t byte) {
  h ^= byte;
  h *= kFnvPrime;
}

inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// FIFO of arrival slots. Storage is reclaimed whenever the queue empties,
// which for stable parameters happens at least once per cycle tail.
class SlotQueue {
 public:
  bool empty() const { return head_ == buf_.size(); }
  std::size_t size() const { return buf_.size() - head_; }
  void push(std::int64_t t) { buf_.push_back(t); }
  std::int64_t pop() {
    const std::int64_t v = buf_[head_++];
    if (head_ == buf_.size()) {
      buf_.clear();
      head_ = 0;
    } else if (head_ > 1u << 16 && head_ * 2 > buf_.size()) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
    return v;
  }

 private:
  std::vector<std::int64_t> buf_;
  std::size_t head_ = 0;
};

struct CycleShape {
  std::int64_t g = 0;
  std::int64_t tau = 0;
  std::int64_t warmup = 0;
};

CycleShape validate(const SimConfig& config) {
  const ShaperParams& params = config.params;
  if (!(params.p >= 0.0) || !(params.p < 1.0)) {
    throw DomainError("arrival probability must lie in [0, 1)");
  }
  CycleShape shape;
  shape.g = std::llround(params.g);
  shape.tau = std::llround(params.tau);
  if (std::fabs(params.g - static_cast<double>(shape.g)) > 1e-9 ||
      std::fabs(params.tau - static_cast<double>(shape.tau)) > 1e-9) {
    throw DomainError("simulation requires integer g and tau");
  }
  if (shape.g < 1 || shape.tau < shape.g) {
    throw DomainError("cycle must satisfy 1 <= g <= tau");
  }
  if (config.n_cycles < 1) {
    throw DomainError("n_cycles must be positive");
  }
  shape.warmup = config.warmup_cycles < 0 ? config.n_cycles / 10
                                          : config.warmup_cycles;
  if (shape.warmup >= config.n_cycles) {
    throw DomainError("warmup must leave at least one measured cycle");
  }
  return shape;
}

}  // namespace

QueueStats simulate(const SimConfig& config) {
  const CycleShape shape = validate(config);
  const double p = config.params.p;
  const std::int64_t total = config.n_cycles * shape.tau;
  const std::int64_t start = shape.warmup * shape.tau;

  std::mt19937_64 gen(config.seed);
  SlotQueue queue;
  std::uint64_t hash = kFnvOffset;
  std::int64_t served = 0;
  std::int64_t dummies = 0;
  std::uint64_t wait_sum = 0;
  std::uint64_t queue_area = 0;
  std::uint64_t end_green_sum = 0;
  std::int64_t cycles_measured = 0;
  std::int64_t pos = 0;

  for (std::int64_t t = 0; t < total; ++t) {
    const bool measured = t >= start;
    const bool arrived = unit_uniform(gen) < p;
    std::uint8_t transmitted = 0;
    if (pos < shape.g) {
      transmitted = 1;
      if (!queue.empty()) {
        if (arrived) queue.push(t);
        const std::int64_t arrival = queue.pop();
        if (measured) {
          wait_sum += static_cast<std::uint64_t>(t - arrival);
          ++served;
        }
      } else if (arrived) {
        // Empty queue during an on-slot: the arrival passes straight
        // through with zero wait.
        if (measured) ++served;
      } else {
        if (measured) ++dummies;
      }
    } else if (arrived) {
      queue.push(t);
    }
    fnv_step(hash, transmitted);
    if (measured) {
      queue_area += queue.size();
      if (pos == shape.g - 1) {
        end_green_sum += queue.size();
        ++cycles_measured;
      }
    }
    if (++pos == shape.tau) pos = 0;
  }

  QueueStats stats;
  const std::int64_t measured_slots = total - start;
  stats.served = served;
  stats.dummies = dummies;
  stats.total_slots = measured_slots;
  stats.mean_wait =
      served > 0 ? static_cast<double>(wait_sum) / static_cast<double>(served)
                 : 0.0;
  stats.mean_end_of_green_queue =
      cycles_measured > 0 ? static_cast<double>(end_green_sum) /
                                static_cast<double>(cycles_measured)
                          : 0.0;
  stats.dummy_fraction =
      static_cast<double>(dummies) / static_cast<double>(measured_slots);
  stats.mean_queue =
      static_cast<double>(queue_area) / static_cast<double>(measured_slots);
  stats.output_pattern_hash = hash;
  stats.stable = config.params.stable();
  return stats;
}

std::vector<std::uint8_t> output_pattern(const SimConfig& config,
                                         std::int64_t horizon) {
  const CycleShape shape = validate(config);
  if (horizon < 0) {
    throw DomainError("horizon must be non-negative");
  }
  const double p = config.params.p;
  std::mt19937_64 gen(config.seed);
  SlotQueue queue;
  std::vector<std::uint8_t> pattern(static_cast<std::size_t>(horizon), 0);
  std::int64_t pos = 0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const bool arrived = unit_uniform(gen) < p;
    if (pos < shape.g) {
      // Every on-slot transmits: a queued packet, the fresh arrival, or a
      // dummy. The indicator is therefore 1 regardless of the branch.
      if (!queue.empty()) {
        if (arrived) queue.push(t);
        queue.pop();
      }
      pattern[static_cast<std::size_t>(t)] = 1;
    } else if (arrived) {
      queue.push(t);
    }
    if (++pos == shape.tau) pos = 0;
  }
  return pattern;
}

std::uint64_t pattern_hash(const std::vector<std::uint8_t>& pattern) {
  std::uint64_t h = kFnvOffset;
  for (std::uint8_t byte : pattern) fnv_step(h, byte);
  return h;
}

std::string queue_stats_csv_header() {
  return "p,g,tau,n_cycles,seed,mean_wait,eq_end_green,dummy_fraction,"
         "stable_flag";
}

std::string queue_stats_csv_row(const SimConfig& config,
                                const QueueStats& stats) {
  std::string row;
  row += csv::fmt(config.params.p);
  row += ',';
  row += csv::fmt(config.params.g);
  row += ',';
  row += csv::fmt(config.params.tau);
  row += ',';
  row += std::to_string(config.n_cycles);
  row += ',';
  row += std::to_string(config.seed);
  row += ',';
  row += csv::fmt(stats.mean_wait);
  row += ',';
  row += csv::fmt(stats.mean_end_of_green_queue);
  row += ',';
  row += csv::fmt(stats.dummy_fraction);
  row += ',';
  row += stats.stable ? '1' : '0';
  return row;
}

}  // namespace fairshape
