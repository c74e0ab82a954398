#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fairshape/model.hpp"
#include "fairshape/sim.hpp"

using namespace fairshape;

namespace {

SimConfig make_config(double p, double g, double tau, std::int64_t cycles,
                      std::uint64_t seed) {
  SimConfig config;
  config.params = {p, g, tau, 1.0};
  config.n_cycles = cycles;
  config.seed = seed;
  return config;
}

// Mean and standard error of a per-replicate statistic across seeds.
template <typename F>
std::pair<double, double> replicate(F&& stat, int reps) {
  std::vector<double> values(reps);
  for (int r = 0; r < reps; ++r) values[r] = stat(r);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= reps;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  return {mean, se};
}

}  // namespace

TEST_CASE("no arrivals: every on-slot carries a dummy") {
  const QueueStats stats = simulate(make_config(0.0, 3, 10, 100, 5));
  CHECK(stats.served == 0);
  CHECK(stats.mean_wait == 0.0);
  CHECK(stats.dummy_fraction == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("same seed reproduces bit-identical statistics") {
  const SimConfig config = make_config(0.3, 5, 10, 20000, 77);
  const QueueStats a = simulate(config);
  const QueueStats b = simulate(config);
  CHECK(a.mean_wait == b.mean_wait);
  CHECK(a.mean_end_of_green_queue == b.mean_end_of_green_queue);
  CHECK(a.dummy_fraction == b.dummy_fraction);
  CHECK(a.served == b.served);
  CHECK(a.dummies == b.dummies);
  CHECK(a.output_pattern_hash == b.output_pattern_hash);
}

TEST_CASE("every measured on-slot transmits exactly one packet") {
  for (double p : {0.0, 0.2, 0.45}) {
    const QueueStats stats = simulate(make_config(p, 5, 10, 5000, 11));
    const std::int64_t on_slots = stats.total_slots / 10 * 5;
    CHECK(stats.served + stats.dummies == on_slots);
  }
}

TEST_CASE("transmit pattern is periodic and ignores arrivals and seeds") {
  const auto pattern = output_pattern(make_config(0.5, 1, 4, 100, 1), 8);
  CHECK(pattern == std::vector<std::uint8_t>{1, 0, 0, 0, 1, 0, 0, 0});

  const auto seed_a = output_pattern(make_config(0.5, 3, 7, 100, 1), 5000);
  const auto seed_b = output_pattern(make_config(0.5, 3, 7, 100, 2), 5000);
  CHECK(pattern_hash(seed_a) == pattern_hash(seed_b));
  CHECK(seed_a == seed_b);

  const auto light = output_pattern(make_config(0.1, 3, 7, 100, 9), 5000);
  const auto heavy = output_pattern(make_config(0.9, 3, 7, 100, 9), 5000);
  CHECK(pattern_hash(light) == pattern_hash(heavy));
  CHECK(light == heavy);

  // The digest from full runs matches across arrival rates too.
  const QueueStats run_a = simulate(make_config(0.1, 3, 7, 2000, 4));
  const QueueStats run_b = simulate(make_config(0.6, 3, 7, 2000, 8));
  CHECK(run_a.output_pattern_hash == run_b.output_pattern_hash);
}

TEST_CASE("unstable runs are flagged but still measured") {
  const QueueStats stats = simulate(make_config(0.6, 5, 10, 2000, 3));
  CHECK_FALSE(stats.stable);
  CHECK(stats.served > 0);
}

TEST_CASE("dummy fraction converges to g/tau - p") {
  // 3-standard-error agreement across independent replicates.
  const double expected = dummy_rate(0.3, 5, 10);
  const auto [mean, se] = replicate(
      [&](int r) {
        return simulate(make_config(0.3, 5, 10, 20000, 1000 + r))
            .dummy_fraction;
      },
      20);
  CHECK(std::fabs(mean - expected) <= 3.0 * se);
}

TEST_CASE("end-of-on-phase queue tracks the closed-form estimate") {
  for (double g : {5.0, 4.0}) {
    const double expected = miller_queue_estimate(0.3, g, 10).value;
    const auto [mean, se] = replicate(
        [&](int r) {
          return simulate(make_config(0.3, g, 10, 100000, 500 + r))
              .mean_end_of_green_queue;
        },
        10);
    CHECK(std::fabs(mean - expected) <= 3.0 * se);
  }
}

TEST_CASE("occupancy obeys Little's law on long stable runs") {
  for (double p : {0.2, 0.3}) {
    const QueueStats stats = simulate(make_config(p, 4, 10, 200000, 21));
    const double expected = p * stats.mean_wait;
    CHECK(stats.mean_queue ==
          doctest::Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("simulated waits track the closed form at tau = 100") {
  for (double g : {40.0, 60.0, 90.0}) {
    const QueueStats stats = simulate(make_config(0.3, g, 100, 20000, 31));
    const double model = mean_waiting_time(0.3, g, 100);
    CHECK(std::fabs(stats.mean_wait - model) <=
          std::max(0.05 * model, 0.5));
  }
}

TEST_CASE("csv row carries the full schema") {
  const SimConfig config = make_config(0.3, 5, 10, 1000, 42);
  const QueueStats stats = simulate(config);
  CHECK(queue_stats_csv_header() ==
        "p,g,tau,n_cycles,seed,mean_wait,eq_end_green,dummy_fraction,"
        "stable_flag");
  const std::string row = queue_stats_csv_row(config, stats);
  CHECK(row.substr(0, 12) == "0.3,5,10,100");
  CHECK(row.back() == '1');
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(simulate(make_config(1.0, 5, 10, 100, 1)), DomainError);
  CHECK_THROWS_AS(simulate(make_config(0.3, 5.5, 10, 100, 1)), DomainError);
  CHECK_THROWS_AS(simulate(make_config(0.3, 5, 10, 0, 1)), DomainError);
  SimConfig bad_warmup = make_config(0.3, 5, 10, 10, 1);
  bad_warmup.warmup_cycles = 10;
  CHECK_THROWS_AS(simulate(bad_warmup), DomainError);
}
