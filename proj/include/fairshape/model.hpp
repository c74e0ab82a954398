#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairshape {

// Shaping parameters that cannot drain the offered load (g <= p*tau, or
// c <= p in the relaxed form).
class StabilityError : public std::domain_error {
 public:
  explicit StabilityError(const std::string& what) : std::domain_error(what) {}
};

// Degenerate or out-of-range inputs (p outside the admissible interval,
// non-positive counts, ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Per-flow on-off shaping configuration. Rates are per slot, g and tau are
// slot counts (g may be fractional where only the duty cycle c = g/tau
// matters). slot_duration converts slots to seconds and is metadata only.
struct ShaperParams {
  double p = 0.0;    // probability of a packet arrival per slot, in [0, 1)
  double g = 1.0;    // on-slots per cycle
  double tau = 1.0;  // cycle length in slots
  double slot_duration = 1.0;

  double duty_cycle() const { return g / tau; }
  bool stable() const { return g - p * tau > 0.0; }
};

// Closed-form outputs for one parameter set.
struct ShaperDerived {
  double expected_queue = 0.0;  // E(q) at the end of the on phase, packets
  double mean_wait = 0.0;       // slots
  double dummy_rate = 0.0;      // dummy transmissions per slot
};

// Expected end-of-on-phase queue together with the side of the max{.,0}
// clamp that produced it. Derivative selection downstream needs the branch,
// not just the value.
struct QueueEstimate {
  double value = 0.0;
  bool clamped = false;  // true when 2*p*tau <= g and the estimate is zero
};

// First partial derivatives of the relaxed waiting time w(p, c).
// `clamped` is true on the zero-backlog branch (c > 2p); exactly at the
// kink c = 2p the backlog branch is used.
struct WaitGradient {
  double d_p = 0.0;
  double d_c = 0.0;
  bool clamped = false;
};

// True iff the queue drains on average: g - p*tau > 0.
bool stability_check(double p, double g, double tau);

// Expected queue length at the end of the on phase,
//   E(q) = max{ (2 p tau - g)(1 - p) / (2 (g - p tau)), 0 }.
QueueEstimate miller_queue_estimate(double p, double g, double tau);

// Mean per-packet wait in slots,
//   w = (tau - g) (1-p)^-1 tau^-1 (E(q)/p + (tau - g + 1)/2).
double mean_waiting_time(double p, double g, double tau);

// Relaxed form with real-valued duty cycle c in (p, 1]:
//   w = (1-c)/(1-p) [E(q)/p + 1/(2c)],  E(q) = max{(2p-c)(1-p)/(2(c-p)), 0}.
double mean_waiting_time_relaxed(double p, double c);

// Same surface parametrised by the dummy rate d = c - p:
//   w = (1-(p+d)) / (2(1-p)) [max{(p-d)(1-p)/(pd), 0} + 1/(p+d)].
// Agrees with mean_waiting_time_relaxed(p, p+d) to machine precision; the
// two are kept as independent code paths on purpose.
double waiting_time_pd(double p, double d);

// Analytic gradient of mean_waiting_time_relaxed.
WaitGradient relaxed_wait_gradient(double p, double c);

// Dummy transmissions per slot, d = g/tau - p. The boundary g/tau = p is
// admitted (zero dummy budget); g/tau < p is an error.
double dummy_rate(double p, double g, double tau);

// Convenience bundle of the three closed forms. p = 0 yields a pure dummy
// stream (queue and wait are zero by convention).
ShaperDerived derive(const ShaperParams& params);

// Integer on-times realising a real duty cycle: g_k in {floor(c tau),
// ceil(c tau)} with every prefix sum within 1 of k*c*tau.
std::vector<std::int64_t> quantize_schedule(double c, std::int64_t tau,
                                            std::int64_t horizon);

}  // namespace fairshape
