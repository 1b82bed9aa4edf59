#pragma once

#include <vector>

namespace hsim {
namespace analytic {

// Closed-form rate model for a pulsed heralded photon source with gated
// detectors, non-paralyzable deadtime and passive spatial multiplexing.
// Rates are in counts/second, times in seconds, probabilities dimensionless.
// All pair-number statistics here are Poissonian.

// Trigger rate of one gated detector with no deadtime:
//   [1 - (1 - dark_prob) exp(-beta*mu)] * clock_rate_hz
// beta folds arm transmittance and detector quantum efficiency.
double triggering_rate(double mu, double beta, double dark_prob,
                       double clock_rate_hz);

// Rate surviving a non-paralyzable deadtime: n / (1 + n*tau).
double deadtime_limited_rate(double free_rate_cps, double deadtime_s);

// Inverse of deadtime_limited_rate. Throws std::domain_error once the
// measured rate reaches the 1/tau saturation.
double inverse_deadtime_correction(double measured_rate_cps,
                                   double deadtime_s);

// Overall heralding rate of m identical detectors behind a symmetric 1xm
// splitter, each arm carrying beta*mu/m.
double psm_heralding_rate(double mu, double beta, double dark_prob,
                          double clock_rate_hz, int m, double deadtime_s);

// QBER ~ 1 / (2 (1 + PSNR)), assuming basis-independent noise spread evenly
// over the receiver detectors and at most one detected noise photon per slot.
double qber_from_psnr(double psnr);

// PSNR improvement factor of a heralded source over a weak coherent source:
// chi = alpha_s (1 + mu) / mu.
double chi_improvement(double alpha_s, double mu);

// Measurement recipe PSNR = S / (S' + N - S) from a noise-off rate S and a
// noise-on rate S' + N.
double psnr_from_counts(double signal_only_cps, double signal_plus_noise_cps);

// Triggered-receiver fractions under injected noise.
struct NoisyFractionReport {
  double n_qkd_noisy_cps = 0.0;  // rate with noise loading the deadtime
  double f = 1.0;                // fraction of photons kept, free-running gates
  double f_improved = 1.0;       // fraction with herald-triggered gates
};

// f part: N_QKD / (1 + (N_QKD + N_noise) tau_hd) and the kept fraction.
NoisyFractionReport noisy_fraction(double n_qkd_cps, double n_noise_cps,
                                   double receiver_deadtime_s);

// f_improved part: herald triggering divides the noise rate by chi*PSNR.
double improved_fraction(double n_qkd_cps, double psnr, double chi,
                         double receiver_deadtime_s);

// Full rate chain for the two-detector multiplexed transmitter feeding one
// receiver detector. Darks are neglected. Field names follow the stages:
// deadtime-free arm rates -> deadtime-limited arm rates -> coincidence and
// trigger rates -> shadow corrections for photons landing inside the
// receiver deadtime of a preceding herald -> expected detected rate.
struct TwoDetectorRateReport {
  double trig1 = 0.0, trig2 = 0.0;       // deadtime-free arm rates
  double det1 = 0.0, det2 = 0.0;         // deadtime-limited arm rates
  double xor_rate = 0.0;                 // same-slot coincidence rate
  double trigger_rate = 0.0;             // herald rate after the veto
  double shadow_raw1 = 0.0, shadow_raw2 = 0.0;  // shadowed-arrival rates
  double shadow1 = 0.0, shadow2 = 0.0;   // ... after the arm deadtime
  double delta1 = 0.0, delta2 = 0.0;     // excess over a tau_hd-limited arm
  double shadow_frac1 = 0.0, shadow_frac2 = 0.0;  // overlap of the two losses
  double detected = 0.0;                 // heralded-photon detection rate
};

// Evaluates the chain for heralding arms beta1, beta2 (split ratio and
// excess loss included), heralding deadtime tau_hr, receiver deadtime
// tau_hd >= tau_hr, and per-herald detection probability alpha_s.
TwoDetectorRateReport two_detector_pipeline(double mu, double beta1,
                                            double beta2,
                                            double clock_rate_hz,
                                            double herald_deadtime_s,
                                            double receiver_deadtime_s,
                                            double alpha_s);

// Single-detector reduction of the same chain: the shadow term is driven by
// the detector's own herald stream since there is no partner arm.
TwoDetectorRateReport single_detector_pipeline(double mu, double beta,
                                               double clock_rate_hz,
                                               double herald_deadtime_s,
                                               double receiver_deadtime_s,
                                               double alpha_s);

// Reconstructed coincidence-to-accidental model for a signal/idler pair
// measurement: true coincidences mu*beta_s*beta_i on top of accidental
// products of the singles probabilities; reported singles rates carry the
// detector deadtime.
struct CarModel {
  double car = 1.0;
  double signal_singles_cps = 0.0;  // deadtime-limited, as a counter reads
  double idler_singles_cps = 0.0;
};

CarModel analytic_car(double mu, double beta_signal, double beta_idler,
                      double dark_signal, double dark_idler, double deadtime_s,
                      double clock_rate_hz = 48.7e6);

// PSNR with afterpulse-heralded contributions: (S + S_AP) / (N + N_AP).
double afterpulse_psnr(double s_cps, double n_cps, double s_ap_cps,
                       double n_ap_cps);

// Heuristic prediction of the afterpulse split: S_AP/N_AP ~ S / (N chi).
double afterpulse_ratio_heuristic(double s_cps, double n_cps, double chi);

}  // namespace analytic
}  // namespace hsim
