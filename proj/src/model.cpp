#include "fairshape/model.hpp"

#include <cmath>

namespace fairshape {

namespace {

void require_arrival_probability(double p, bool allow_zero) {
  if (!(p >= 0.0) || !(p < 1.0)) {
    throw DomainError("arrival probability must lie in [0, 1)");
  }
  if (!allow_zero && p == 0.0) {
    throw DomainError("arrival probability must be positive");
  }
}

void require_cycle(double g, double tau) {
  if (!(g >= 1.0) || !(tau >= g)) {
    throw DomainError("cycle must satisfy 1 <= g <= tau");
  }
}

void require_duty_cycle(double p, double c) {
  if (!(c > p)) {
    throw StabilityError("duty cycle must exceed the arrival rate");
  }
  if (!(c <= 1.0)) {
    throw DomainError("duty cycle must not exceed 1");
  }
}

}  // namespace

bool stability_check(double p, double g, double tau) {
  return g - p * tau > 0.0;
}

QueueEstimate miller_queue_estimate(double p, double g, double tau) {
  require_arrival_probability(p, /*allow_zero=*/true);
  require_cycle(g, tau);
  if (!stability_check(p, g, tau)) {
    throw StabilityError("unstable shaper: g <= p * tau");
  }
  QueueEstimate est;
  est.clamped = 2.0 * p * tau <= g;
  est.value = est.clamped
                  ? 0.0
                  : (2.0 * p * tau - g) * (1.0 - p) / (2.0 * (g - p * tau));
  return est;
}

double mean_waiting_time(double p, double g, double tau) {
  require_arrival_probability(p, /*allow_zero=*/false);
  require_cycle(g, tau);
  if (!stability_check(p, g, tau)) {
    throw StabilityError("unstable shaper: g <= p * tau");
  }
  const double eq = miller_queue_estimate(p, g, tau).value;
  return (tau - g) / ((1.0 - p) * tau) * (eq / p + (tau - g + 1.0) / 2.0);
}

double mean_waiting_time_relaxed(double p, double c) {
  require_arrival_probability(p, /*allow_zero=*/false);
  require_duty_cycle(p, c);
  const double eq =
      std::max((2.0 * p - c) * (1.0 - p) / (2.0 * (c - p)), 0.0);
  return (1.0 - c) / (1.0 - p) * (eq / p + 0.5 / c);
}

double waiting_time_pd(double p, double d) {
  require_arrival_probability(p, /*allow_zero=*/false);
  if (!(d > 0.0)) {
    throw StabilityError("dummy rate must be positive");
  }
  if (p + d > 1.0) {
    throw DomainError("p + d must not exceed 1");
  }
  const double c = p + d;
  const double backlog = std::max((p - d) * (1.0 - p) / (p * d), 0.0);
  return (1.0 - c) / (2.0 * (1.0 - p)) * (backlog + 1.0 / c);
}

WaitGradient relaxed_wait_gradient(double p, double c) {
  require_arrival_probability(p, /*allow_zero=*/false);
  require_duty_cycle(p, c);
  WaitGradient grad;
  grad.clamped = c > 2.0 * p;
  const double q = 1.0 - p;
  if (grad.clamped) {
    grad.d_p = (1.0 - c) / (2.0 * c * q * q);
    grad.d_c = -1.0 / (2.0 * c * c * q);
  } else {
    const double u = c - p;
    grad.d_p =
        0.5 * (1.0 - c) * (1.0 / (u * u) + 1.0 / (p * p) + 1.0 / (c * q * q));
    grad.d_c = 0.5 * (-q / (u * u) + 1.0 / p - 1.0 / (c * c * q));
  }
  return grad;
}

double dummy_rate(double p, double g, double tau) {
  require_arrival_probability(p, /*allow_zero=*/true);
  require_cycle(g, tau);
  if (g / tau < p) {
    throw StabilityError("unstable shaper: g / tau < p");
  }
  return g / tau - p;
}

ShaperDerived derive(const ShaperParams& params) {
  ShaperDerived out;
  out.dummy_rate = dummy_rate(params.p, params.g, params.tau);
  if (params.p == 0.0) {
    return out;  // pure dummy stream: nothing queues, nothing waits
  }
  out.expected_queue =
      miller_queue_estimate(params.p, params.g, params.tau).value;
  out.mean_wait = mean_waiting_time(params.p, params.g, params.tau);
  return out;
}

std::vector<std::int64_t> quantize_schedule(double c, std::int64_t tau,
                                            std::int64_t horizon) {
  if (!(c > 0.0) || !(c <= 1.0)) {
    throw DomainError("duty cycle must lie in (0, 1]");
  }
  if (tau < 1 || horizon < 1) {
    throw DomainError("tau and horizon must be positive");
  }
  std::vector<std::int64_t> on_times(static_cast<std::size_t>(horizon));
  std::int64_t prev = 0;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    // Ceiling accumulator keeps every prefix within 1 of k*c*tau; the small
    // epsilon stops representation noise from bumping exact integers up.
    const auto prefix = static_cast<std::int64_t>(
        std::ceil(c * static_cast<double>(tau) * static_cast<double>(k) -
                  1e-9));
    on_times[static_cast<std::size_t>(k - 1)] = prefix - prev;
    prev = prefix;
  }
  return on_times;
}

}  // namespace fairshape
