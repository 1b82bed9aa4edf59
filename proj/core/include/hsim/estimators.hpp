#pragma once

#include <utility>

#include "hsim/types.hpp"

namespace hsim {
namespace estimators {

// Reductions from slot tallies to physical metrics. Standard errors use
// first-order Poisson/binomial propagation; estimates are deterministic
// functions of the counters.

// heralds / elapsed time, with a binomial standard error.
MetricEstimate herald_rate(const Counters& c, double clock_rate_hz);

// Any per-slot tally to a rate (same binomial error model).
MetricEstimate rate_from_counts(std::int64_t counts, std::int64_t slots,
                                double clock_rate_hz);

// Conditional Hanbury-Brown-Twiss estimator
//   g2 = (triples * heralds) / (det3 * det4)
// for receiver gates opened by heralds. Requires det3 > 0 and det4 > 0.
MetricEstimate g2_estimate(const Counters& c);

// car_true_coinc / car_accidental with a ratio-of-Poissons error.
// Requires car_accidental > 0.
MetricEstimate car_estimate(const Counters& c);

// PSNR from a noise-on / noise-off run pair via S / (S' + N - S) on the
// receiver totals, and the QBER it implies. Throws std::domain_error when
// the inferred noise is not positive.
std::pair<MetricEstimate, MetricEstimate> psnr_qber_estimate(
    const Counters& noise_on, const Counters& noise_off);

}  // namespace estimators
}  // namespace hsim
