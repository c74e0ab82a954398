#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "fairshape/trace.hpp"

using namespace fairshape;

namespace {

PacketTrace make_trace(std::vector<double> ts, const char* label = "t") {
  PacketTrace trace;
  trace.timestamps = std::move(ts);
  trace.label = label;
  return trace;
}

// Bernoulli-style random trace on the slot grid.
PacketTrace random_slotted_trace(double p, int slots, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PacketTrace trace;
  for (int s = 0; s < slots; ++s) {
    if (unit(gen) < p) trace.timestamps.push_back(s * 0.01);
  }
  return trace;
}

}  // namespace

TEST_CASE("slotting floors to the grid and keeps order") {
  const PacketTrace out = slot_trace(make_trace({0.013, 0.027}), 0.01);
  CHECK(out.timestamps[0] == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(out.timestamps[1] == doctest::Approx(0.02).epsilon(1e-12));

  const PacketTrace same = slot_trace(make_trace({0.0, 0.01}), 0.01);
  CHECK(same.timestamps[0] == 0.0);
  CHECK(same.timestamps[1] == doctest::Approx(0.01).epsilon(1e-12));

  CHECK(slot_trace(make_trace({}), 0.01).timestamps.empty());
  CHECK_THROWS_AS(slot_trace(make_trace({0.1}), 0.0), DomainError);
  CHECK_THROWS_AS(slot_trace(make_trace({0.3, 0.1}), 0.01), DomainError);
}

TEST_CASE("shaping an empty trace opens no session") {
  const ShapeOutput out = shape_trace(make_trace({}), 0.01, 5, 10);
  CHECK(out.transmissions.empty());
  CHECK(out.report.dummy_count == 0);
  CHECK(out.report.real_count == 0);
}

TEST_CASE("shaped transmissions conserve packets in order") {
  const PacketTrace trace = random_slotted_trace(0.25, 2000, 9);
  const ShapeOutput out = shape_trace(trace, 0.01, 5, 10);
  CHECK(out.report.real_count == out.report.original_count);
  CHECK(out.report.real_count ==
        static_cast<std::int64_t>(trace.timestamps.size()));

  // Real transmissions appear in arrival order and never precede arrival.
  std::size_t next = 0;
  for (const ShapedTransmission& tx : out.transmissions) {
    if (tx.dummy) continue;
    CHECK(tx.time >= trace.timestamps[next] - 1e-9);
    ++next;
  }
  CHECK(next == trace.timestamps.size());

  // One transmission per on-slot over the session.
  const std::int64_t on_slots =
      static_cast<std::int64_t>(out.transmissions.size());
  CHECK(out.report.real_count + out.report.dummy_count == on_slots);
}

TEST_CASE("transmission times depend only on the grid") {
  const PacketTrace a = random_slotted_trace(0.3, 3000, 1);
  const PacketTrace b = random_slotted_trace(0.05, 3000, 2);
  const ShapeOutput sa = shape_trace(a, 0.01, 5, 10);
  const ShapeOutput sb = shape_trace(b, 0.01, 5, 10);
  const double horizon =
      std::min(sa.transmissions.back().time, sb.transmissions.back().time);
  std::vector<double> ta, tb;
  for (const auto& tx : sa.transmissions) {
    if (tx.time <= horizon) ta.push_back(tx.time);
  }
  for (const auto& tx : sb.transmissions) {
    if (tx.time <= horizon) tb.push_back(tx.time);
  }
  CHECK(ta == tb);  // exact: the grid is the grid
}

TEST_CASE("dummy volume follows the duty-cycle surplus") {
  const PacketTrace trace = random_slotted_trace(0.2, 20000, 33);
  const ShapeOutput out = shape_trace(trace, 0.01, 5, 10);
  const double p_hat =
      static_cast<double>(out.report.real_count) /
      static_cast<double>(out.report.session_slots);
  const double predicted = (0.5 - p_hat) / p_hat;
  const double actual =
      static_cast<double>(out.report.dummy_count) /
      static_cast<double>(out.report.real_count);
  CHECK(actual == doctest::Approx(predicted).epsilon(0.02));
}

TEST_CASE("narrower duty cycles trade dummies for delay") {
  const PacketTrace trace = random_slotted_trace(0.004, 40000, 15);
  const ShapeOutput wide = shape_trace(trace, 0.01, 5, 10);
  const ShapeOutput narrow = shape_trace(trace, 0.01, 1, 100);
  const auto ratio = [](const ShapeReport& r) {
    return static_cast<double>(r.dummy_count) /
           static_cast<double>(r.real_count);
  };
  CHECK(ratio(narrow.report) < ratio(wide.report));
  CHECK(narrow.report.mean_buffer_delay > wide.report.mean_buffer_delay);
}

TEST_CASE("distance is a symmetric premetric on [0, 1]") {
  const PacketTrace a = random_slotted_trace(0.2, 3000, 4);
  const PacketTrace b = random_slotted_trace(0.1, 3000, 5);
  CHECK(dtw_distance(a, a, 0.2) == 0.0);
  const double ab = dtw_distance(a, b, 0.2);
  const double ba = dtw_distance(b, a, 0.2);
  CHECK(ab == ba);
  CHECK(ab >= 0.0);
  CHECK(ab <= 1.0);
  CHECK_THROWS_AS(dtw_distance(make_trace({}), b, 0.2), DomainError);
}

TEST_CASE("corpus report orders the three processing levels") {
  const std::vector<PacketTrace> corpus =
      synthetic_corpus({10, 30.0, 42});
  REQUIRE(corpus.size() == 10);
  const CorpusReport report = corpus_report(corpus, 0.01, 5, 10, 0.2);
  CHECK(report.unmodified.mean > report.slotted.mean);
  CHECK(report.slotted.mean > report.shaped.mean);
  CHECK(report.shaped.variance < report.slotted.variance);
  CHECK(report.shaped.variance < report.unmodified.variance);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (std::size_t j = i + 1; j < corpus.size(); ++j) {
      CHECK(report.shaped_matrix[i][j] == 0.0);
    }
  }
}

TEST_CASE("identical traces yield zero distances at every level") {
  const PacketTrace a = random_slotted_trace(0.2, 1000, 6);
  const CorpusReport report = corpus_report({a, a}, 0.01, 5, 10, 0.2);
  CHECK(report.unmodified.mean == 0.0);
  CHECK(report.slotted.mean == 0.0);
  CHECK(report.shaped.mean == 0.0);
}

TEST_CASE("synthetic corpus is deterministic and spans sparse sites") {
  const std::vector<PacketTrace> a = synthetic_corpus({10, 30.0, 42});
  const std::vector<PacketTrace> b = synthetic_corpus({10, 30.0, 42});
  REQUIRE(a.size() == b.size());
  int sparse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].timestamps == b[i].timestamps);
    REQUIRE_FALSE(a[i].timestamps.empty());
    const double span =
        a[i].timestamps.back() - a[i].timestamps.front() + 0.01;
    const double rate = a[i].timestamps.size() * 0.01 / span;  // per slot
    if (rate < 0.01) ++sparse;
  }
  CHECK(sparse >= 2);
}

TEST_CASE("trace csv round trip") {
  const PacketTrace trace = make_trace({0.0, 0.5, 1.25}, "roundtrip");
  const std::string path = "trace_roundtrip_tmp.csv";
  save_trace_csv(trace, path);
  const PacketTrace loaded = load_trace_csv(path);
  REQUIRE(loaded.timestamps.size() == 3);
  CHECK(loaded.timestamps[2] == doctest::Approx(1.25).epsilon(1e-9));
  CHECK(loaded.label == "trace_roundtrip_tmp");
  std::remove(path.c_str());
}
