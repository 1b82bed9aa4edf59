#include "hsim/analytic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hsim {
namespace analytic {

namespace {

// 1 - (1 - dark) e^{-x}, evaluated with expm1 so small x keeps full
// precision.
double gate_fire_prob(double x, double dark) {
  return dark + (1.0 - dark) * (-std::expm1(-x));
}

void require(bool ok, const char* message) {
  if (!ok) throw std::domain_error(message);
}

}  // namespace

double triggering_rate(double mu, double beta, double dark_prob,
                       double clock_rate_hz) {
  require(mu >= 0.0 && beta >= 0.0 && beta <= 1.0, "invalid mu or beta");
  require(dark_prob >= 0.0 && dark_prob < 1.0, "invalid dark probability");
  require(clock_rate_hz > 0.0, "clock rate must be > 0");
  return gate_fire_prob(beta * mu, dark_prob) * clock_rate_hz;
}

double deadtime_limited_rate(double free_rate_cps, double deadtime_s) {
  require(free_rate_cps >= 0.0, "rate must be >= 0");
  require(deadtime_s >= 0.0, "deadtime must be >= 0");
  return free_rate_cps / (1.0 + free_rate_cps * deadtime_s);
}

double inverse_deadtime_correction(double measured_rate_cps,
                                   double deadtime_s) {
  require(measured_rate_cps >= 0.0, "rate must be >= 0");
  require(deadtime_s >= 0.0, "deadtime must be >= 0");
  const double loss = measured_rate_cps * deadtime_s;
  if (loss >= 1.0) throw std::domain_error("rate exceeds deadtime saturation");
  return measured_rate_cps / (1.0 - loss);
}

double psm_heralding_rate(double mu, double beta, double dark_prob,
                          double clock_rate_hz, int m, double deadtime_s) {
  require(m >= 1, "m must be >= 1");
  const double arm_rate =
      triggering_rate(mu, beta / m, dark_prob, clock_rate_hz);
  return m * deadtime_limited_rate(arm_rate, deadtime_s);
}

double qber_from_psnr(double psnr) {
  require(!(psnr < 0.0), "PSNR must be >= 0");
  if (std::isinf(psnr)) return 0.0;
  return 1.0 / (2.0 * (1.0 + psnr));
}

double chi_improvement(double alpha_s, double mu) {
  require(alpha_s > 0.0 && alpha_s <= 1.0, "alpha_s must be in (0,1]");
  if (mu <= 0.0) throw std::domain_error("undefined improvement at zero flux");
  return alpha_s * (1.0 + mu) / mu;
}

double psnr_from_counts(double signal_only_cps, double signal_plus_noise_cps) {
  require(signal_only_cps >= 0.0, "signal rate must be >= 0");
  if (signal_plus_noise_cps <= signal_only_cps) {
    throw std::domain_error("no measurable noise");
  }
  return signal_only_cps / (signal_plus_noise_cps - signal_only_cps);
}

NoisyFractionReport noisy_fraction(double n_qkd_cps, double n_noise_cps,
                                   double receiver_deadtime_s) {
  require(n_qkd_cps >= 0.0 && n_noise_cps >= 0.0, "rates must be >= 0");
  require(receiver_deadtime_s >= 0.0, "deadtime must be >= 0");
  NoisyFractionReport r;
  const double tau = receiver_deadtime_s;
  r.n_qkd_noisy_cps = n_qkd_cps / (1.0 + (n_qkd_cps + n_noise_cps) * tau);
  // (1 + N tau) / (1 + (N + N_noise) tau); the noise-free denominator uses
  // the same N(1 + 1/PSNR) form with PSNR = N/N_noise.
  r.f = (1.0 + n_qkd_cps * tau) / (1.0 + (n_qkd_cps + n_noise_cps) * tau);
  r.f_improved = r.f;  // callers with a chi fill this via improved_fraction
  return r;
}

double improved_fraction(double n_qkd_cps, double psnr, double chi,
                         double receiver_deadtime_s) {
  require(n_qkd_cps >= 0.0, "rate must be >= 0");
  require(psnr > 0.0, "PSNR must be > 0");
  require(chi >= 1.0, "chi must be >= 1");
  require(receiver_deadtime_s >= 0.0, "deadtime must be >= 0");
  const double tau = receiver_deadtime_s;
  return (1.0 + n_qkd_cps * tau) /
         (1.0 + n_qkd_cps * (1.0 + 1.0 / (chi * psnr)) * tau);
}

namespace {

// Shared tail of the pipeline once the shadow-arrival rates are known.
// Order matters: the shadow corrections consume the deadtime-limited rates
// and the coincidence rate computed before them.
TwoDetectorRateReport finish_pipeline(double mu, double beta1, double beta2,
                                      double f, double tau_hr, double tau_hd,
                                      double alpha_s, bool self_shadow) {
  TwoDetectorRateReport r;
  r.trig1 = -std::expm1(-beta1 * mu) * f;
  r.trig2 = -std::expm1(-beta2 * mu) * f;
  r.det1 = deadtime_limited_rate(r.trig1, tau_hr);
  r.det2 = deadtime_limited_rate(r.trig2, tau_hr);
  r.xor_rate = r.det1 * r.det2 / f;
  r.trigger_rate = r.det1 + r.det2 - 2.0 * r.xor_rate;

  // Arrivals at arm i that land inside the receiver deadtime opened by the
  // partner arm's heralds (or by the arm's own heralds when it has no
  // partner).
  const double src1 = self_shadow ? r.det1 : (r.det2 - r.xor_rate);
  const double src2 = self_shadow ? r.det2 : (r.det1 - r.xor_rate);
  r.shadow_raw1 = -std::expm1(-src1 * tau_hd * beta1 * mu) * f;
  r.shadow_raw2 = -std::expm1(-src2 * tau_hd * beta2 * mu) * f;
  r.shadow1 = deadtime_limited_rate(r.shadow_raw1, tau_hr);
  r.shadow2 = deadtime_limited_rate(r.shadow_raw2, tau_hr);

  r.delta1 = r.det1 - deadtime_limited_rate(r.trig1, tau_hd);
  r.delta2 = r.det2 - deadtime_limited_rate(r.trig2, tau_hd);
  r.shadow_frac1 = r.det1 > 0.0 ? (r.delta1 / r.det1) * r.shadow1 : 0.0;
  r.shadow_frac2 = r.det2 > 0.0 ? (r.delta2 / r.det2) * r.shadow2 : 0.0;

  const double corr1 = r.delta1 + r.shadow1 - alpha_s * r.shadow_frac1;
  const double corr2 = r.delta2 + r.shadow2 - alpha_s * r.shadow_frac2;
  r.detected = alpha_s * (r.trigger_rate - alpha_s * (corr1 + corr2));
  return r;
}

void check_pipeline_args(double mu, double beta1, double beta2, double f,
                         double tau_hr, double tau_hd, double alpha_s) {
  require(mu >= 0.0, "mu must be >= 0");
  require(beta1 >= 0.0 && beta1 <= 1.0 && beta2 >= 0.0 && beta2 <= 1.0,
          "beta must be in [0,1]");
  require(f > 0.0, "clock rate must be > 0");
  require(tau_hr >= 0.0 && tau_hd >= 0.0, "deadtimes must be >= 0");
  require(tau_hd >= tau_hr,
          "receiver deadtime must be >= heralding deadtime in this model");
  require(alpha_s >= 0.0 && alpha_s <= 1.0, "alpha_s must be in [0,1]");
}

}  // namespace

TwoDetectorRateReport two_detector_pipeline(double mu, double beta1,
                                            double beta2,
                                            double clock_rate_hz,
                                            double herald_deadtime_s,
                                            double receiver_deadtime_s,
                                            double alpha_s) {
  check_pipeline_args(mu, beta1, beta2, clock_rate_hz, herald_deadtime_s,
                      receiver_deadtime_s, alpha_s);
  return finish_pipeline(mu, beta1, beta2, clock_rate_hz, herald_deadtime_s,
                         receiver_deadtime_s, alpha_s, false);
}

TwoDetectorRateReport single_detector_pipeline(double mu, double beta,
                                               double clock_rate_hz,
                                               double herald_deadtime_s,
                                               double receiver_deadtime_s,
                                               double alpha_s) {
  check_pipeline_args(mu, beta, 0.0, clock_rate_hz, herald_deadtime_s,
                      receiver_deadtime_s, alpha_s);
  return finish_pipeline(mu, beta, 0.0, clock_rate_hz, herald_deadtime_s,
                         receiver_deadtime_s, alpha_s, true);
}

CarModel analytic_car(double mu, double beta_signal, double beta_idler,
                      double dark_signal, double dark_idler, double deadtime_s,
                      double clock_rate_hz) {
  require(mu >= 0.0, "mu must be >= 0");
  require(beta_signal >= 0.0 && beta_signal <= 1.0 && beta_idler >= 0.0 &&
              beta_idler <= 1.0,
          "beta must be in [0,1]");
  require(clock_rate_hz > 0.0, "clock rate must be > 0");
  CarModel m;
  const double p_s = gate_fire_prob(beta_signal * mu, dark_signal);
  const double p_i = gate_fire_prob(beta_idler * mu, dark_idler);
  const double p_acc = p_s * p_i;
  const double p_cc = mu * beta_signal * beta_idler + p_acc;
  m.car = p_acc > 0.0 ? p_cc / p_acc : 1.0;
  // Singles are reported as a deadtime-limited counter reads them; the CAR
  // itself is a same-slot to offset-slot ratio in which the live-time
  // factors cancel to first order.
  m.signal_singles_cps =
      deadtime_limited_rate(p_s * clock_rate_hz, deadtime_s);
  m.idler_singles_cps = deadtime_limited_rate(p_i * clock_rate_hz, deadtime_s);
  return m;
}

double afterpulse_psnr(double s_cps, double n_cps, double s_ap_cps,
                       double n_ap_cps) {
  require(s_cps >= 0.0 && n_cps >= 0.0 && s_ap_cps >= 0.0 && n_ap_cps >= 0.0,
          "rates must be >= 0");
  const double denom = n_cps + n_ap_cps;
  if (denom <= 0.0) throw std::domain_error("zero noise denominator");
  return (s_cps + s_ap_cps) / denom;
}

double afterpulse_ratio_heuristic(double s_cps, double n_cps, double chi) {
  require(chi > 0.0, "chi must be > 0");
  if (n_cps <= 0.0) throw std::domain_error("zero noise denominator");
  return s_cps / (n_cps * chi);
}

}  // namespace analytic
}  // namespace hsim
