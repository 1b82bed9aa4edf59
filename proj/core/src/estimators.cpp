#include "hsim/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace hsim {
namespace estimators {

namespace {

void require(bool ok, const char* message) {
  if (!ok) throw std::domain_error(message);
}

}  // namespace

MetricEstimate rate_from_counts(std::int64_t counts, std::int64_t slots,
                                double clock_rate_hz) {
  require(slots > 0, "no slots recorded");
  require(clock_rate_hz > 0.0, "clock rate must be > 0");
  const double n = static_cast<double>(slots);
  const double p = static_cast<double>(counts) / n;
  MetricEstimate e;
  e.value = p * clock_rate_hz;
  e.std_error = clock_rate_hz * std::sqrt(p * (1.0 - p) / n);
  e.n_samples = slots;
  return e;
}

MetricEstimate herald_rate(const Counters& c, double clock_rate_hz) {
  return rate_from_counts(c.heralds, c.slots, clock_rate_hz);
}

MetricEstimate g2_estimate(const Counters& c) {
  require(c.det3 > 0 && c.det4 > 0, "insufficient statistics");
  require(c.heralds > 0, "no heralds recorded");
  MetricEstimate e;
  e.n_samples = c.slots;
  const double h = static_cast<double>(c.heralds);
  const double d3 = static_cast<double>(c.det3);
  const double d4 = static_cast<double>(c.det4);
  if (c.triples == 0) {
    e.value = 0.0;
    e.std_error = h / (d3 * d4);  // one-event scale
    return e;
  }
  const double t = static_cast<double>(c.triples);
  e.value = t * h / (d3 * d4);
  e.std_error =
      e.value * std::sqrt(1.0 / t + 1.0 / h + 1.0 / d3 + 1.0 / d4);
  return e;
}

MetricEstimate car_estimate(const Counters& c) {
  require(c.car_accidental > 0, "no accidental coincidences recorded");
  MetricEstimate e;
  e.n_samples = c.slots;
  const double acc = static_cast<double>(c.car_accidental);
  if (c.car_true_coinc == 0) {
    e.value = 0.0;
    e.std_error = 1.0 / acc;
    return e;
  }
  const double t = static_cast<double>(c.car_true_coinc);
  e.value = t / acc;
  e.std_error = e.value * std::sqrt(1.0 / t + 1.0 / acc);
  return e;
}

std::pair<MetricEstimate, MetricEstimate> psnr_qber_estimate(
    const Counters& noise_on, const Counters& noise_off) {
  require(noise_on.slots > 0 && noise_off.slots > 0, "no slots recorded");
  const double s_counts =
      static_cast<double>(noise_off.det3 + noise_off.det4);
  const double t_counts = static_cast<double>(noise_on.det3 + noise_on.det4);
  const double s = s_counts / static_cast<double>(noise_off.slots);
  const double t = t_counts / static_cast<double>(noise_on.slots);
  if (t <= s) throw std::domain_error("non-positive inferred noise");

  const double d = t - s;
  const double psnr = s / d;
  // var from Poisson counts, PSNR = S/(T-S): dP/dS = T/(T-S)^2,
  // dP/dT = -S/(T-S)^2.
  const double var_s =
      s_counts / (static_cast<double>(noise_off.slots) *
                  static_cast<double>(noise_off.slots));
  const double var_t = t_counts / (static_cast<double>(noise_on.slots) *
                                   static_cast<double>(noise_on.slots));
  const double psnr_var = (t * t * var_s + s * s * var_t) / (d * d * d * d);

  MetricEstimate p;
  p.value = psnr;
  p.std_error = std::sqrt(psnr_var);
  p.n_samples = std::min(noise_on.slots, noise_off.slots);

  MetricEstimate q;
  q.value = 1.0 / (2.0 * (1.0 + psnr));
  q.std_error = p.std_error / (2.0 * (1.0 + psnr) * (1.0 + psnr));
  q.n_samples = p.n_samples;
  return {p, q};
}

}  // namespace estimators
}  // namespace hsim
