#include "hsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>

#include "hsim/analytic.hpp"
#include "hsim/config_io.hpp"
#include "hsim/estimators.hpp"
#include "hsim/rng.hpp"
#include "hsim/simulator.hpp"

namespace hsim {
namespace experiments {

namespace {

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 2;
}

// Runs fn(0..n-1) on a fixed pool; each index writes only its own outputs,
// so results do not depend on scheduling.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const int w = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers)), n));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          fn(i);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double total_heralding_beta(const SystemConfig& cfg) {
  double b = 0.0;
  for (int i = 0; i < cfg.heralding.m; ++i) {
    b += cfg.heralding.arm_transmittance[i] *
         cfg.heralding.detectors[i].efficiency;
  }
  return b;
}

double herald_dark(const SystemConfig& cfg) {
  return cfg.heralding.detectors[0].dark_prob;
}

// Herald rate of the veto output: per-arm deadtime-limited rates minus
// twice the coincidence rate. For m=1 this is just the arm rate.
double analytic_trigger_rate(const SystemConfig& cfg) {
  const double f = cfg.source.clock_rate_hz;
  const double mu = cfg.source.mu;
  if (cfg.heralding.m == 1) {
    const double b = total_heralding_beta(cfg);
    return analytic::deadtime_limited_rate(
        analytic::triggering_rate(mu, b, herald_dark(cfg), f),
        cfg.heralding.detectors[0].deadtime_s);
  }
  double rates[2] = {0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    const double b = cfg.heralding.arm_transmittance[i] *
                     cfg.heralding.detectors[i].efficiency;
    rates[i] = analytic::deadtime_limited_rate(
        analytic::triggering_rate(mu, b, cfg.heralding.detectors[i].dark_prob,
                                  f),
        cfg.heralding.detectors[i].deadtime_s);
  }
  const double xr = rates[0] * rates[1] / f;
  return rates[0] + rates[1] - 2.0 * xr;
}

// Per-herald detection probability at the receiver for the closed-form
// chain. Accounts for the extra pairs accompanying the heralding one:
// size-biasing of the firing arm, the pairs the splitter never routed, and
// the partner arm's pairs weighted by how often that arm is blind rather
// than empty.
double alpha_s_model(double mu, double q, double t_fired, double t_partner,
                     double partner_live_fraction, double t_total) {
  if (q <= 0.0) return 0.0;
  if (mu <= 0.0) return q;
  const double lam_i = t_fired * mu;
  const double unrouted = (1.0 - t_total) * mu;
  double g = 1.0;
  if (lam_i > 0.0) {
    g = (std::exp(-lam_i * q) - std::exp(-lam_i)) /
        ((1.0 - q) * (-std::expm1(-lam_i)));
  }
  double partner_factor = 1.0;
  if (t_partner > 0.0) {
    const double lam_j = t_partner * mu;
    const double live = std::clamp(partner_live_fraction, 0.0, 1.0);
    const double denom = live * std::exp(-lam_j) + (1.0 - live);
    const double w = denom > 0.0 ? live * std::exp(-lam_j) / denom : 1.0;
    partner_factor = w + (1.0 - w) * std::exp(-lam_j * q);
  }
  return 1.0 - (1.0 - q) * std::exp(-unrouted * q) * g * partner_factor;
}

// Closed-form receiver rate for a counting receiver (single detector,
// hbt_split = 1) behind the configured transmitter.
double analytic_receiver_rate(const SystemConfig& cfg) {
  const double f = cfg.source.clock_rate_hz;
  const double mu = cfg.source.mu;
  const double q =
      cfg.receiver.channel_transmittance * cfg.receiver.detector3.efficiency;
  const double tau_hr = cfg.heralding.detectors[0].deadtime_s;
  const double tau_hd = cfg.receiver.detector3.deadtime_s;
  if (cfg.heralding.m == 1) {
    const double b = total_heralding_beta(cfg);
    const double alpha = alpha_s_model(mu, q, b, 0.0, 1.0, b);
    return analytic::single_detector_pipeline(mu, b, f, tau_hr, tau_hd, alpha)
        .detected;
  }
  const double b1 = cfg.heralding.arm_transmittance[0] *
                    cfg.heralding.detectors[0].efficiency;
  const double b2 = cfg.heralding.arm_transmittance[1] *
                    cfg.heralding.detectors[1].efficiency;
  const double partner_rate = analytic::deadtime_limited_rate(
      analytic::triggering_rate(mu, b2, 0.0, f), tau_hr);
  const double live_j = 1.0 - partner_rate * tau_hr;
  const double alpha =
      alpha_s_model(mu, q, b1, b2, live_j, b1 + b2);
  return analytic::two_detector_pipeline(mu, b1, b2, f, tau_hr, tau_hd, alpha)
      .detected;
}

MetricEstimate ratio_gain_pct(const MetricEstimate& hi,
                              const MetricEstimate& lo) {
  MetricEstimate g;
  g.n_samples = std::min(hi.n_samples, lo.n_samples);
  if (lo.value <= 0.0 || hi.value <= 0.0) return g;
  const double r = hi.value / lo.value;
  g.value = (r - 1.0) * 100.0;
  const double rel2 = (hi.std_error / hi.value) * (hi.std_error / hi.value) +
                      (lo.std_error / lo.value) * (lo.std_error / lo.value);
  g.std_error = 100.0 * r * std::sqrt(rel2);
  return g;
}

MetricEstimate arm_rate(const Counters& c, int arm, double f) {
  return estimators::rate_from_counts(c.det_arm[arm], c.slots, f);
}

MetricEstimate receiver_total_rate(const Counters& c, double f) {
  return estimators::rate_from_counts(c.det3 + c.det4, c.slots, f);
}

std::vector<double> default_noise_grid() {
  return {0.0,  0.03, 0.06, 0.10, 0.14, 0.18, 0.22, 0.27,
          0.32, 0.38, 0.45, 0.55, 0.70, 0.85, 1.0};
}

void validate_spec(const SweepSpec& spec) {
  if (spec.axis_values.empty()) throw ConfigError("axis value list is empty");
  if (!std::is_sorted(spec.axis_values.begin(), spec.axis_values.end())) {
    throw ConfigError("axis values must be sorted ascending");
  }
  if (spec.replicates < 1) throw ConfigError("replicates must be >= 1");
  validate_config(spec.base);
  if (spec.scenario != Scenario::validation_matrix) {
    SystemConfig probe = spec.base;
    config_io::apply_key(probe, spec.axis, fmt_value(spec.axis_values[0]));
  }
}

SweepRow make_row_shell(const SweepSpec& spec, int axis_idx, int rep) {
  SweepRow row;
  row.axis_value = spec.axis_values[static_cast<std::size_t>(axis_idx)];
  row.replicate = rep;
  row.seed = row_seed(spec.base.seed, axis_idx, rep);
  return row;
}

SystemConfig row_config(const SweepSpec& spec, const SweepRow& row) {
  SystemConfig cfg = spec.base;
  config_io::apply_key(cfg, spec.axis, fmt_value(row.axis_value));
  cfg.seed = row.seed;
  return cfg;
}

void add_g2(SweepRow& row, const std::string& name, const Counters& c) {
  try {
    row.metrics[name] = estimators::g2_estimate(c);
  } catch (const std::exception& e) {
    row.errors[name] = e.what();
  }
}

// --- per-scenario row fills -------------------------------------------------

void fill_car_row(const SystemConfig& cfg, SweepRow& row) {
  const double f = cfg.source.clock_rate_hz;
  const Counters c = simulate(cfg);
  row.metrics["idler_rate_cps"] = arm_rate(c, 0, f);
  row.metrics["signal_rate_cps"] =
      estimators::rate_from_counts(c.det3, c.slots, f);
  try {
    row.metrics["car"] = estimators::car_estimate(c);
  } catch (const std::exception& e) {
    row.errors["car"] = e.what();
  }
  const double beta_i = cfg.heralding.arm_transmittance[0] *
                        cfg.heralding.detectors[0].efficiency;
  const double beta_s =
      cfg.receiver.channel_transmittance * cfg.receiver.detector3.efficiency;
  const auto model = analytic::analytic_car(
      cfg.source.mu, beta_s, beta_i, cfg.receiver.detector3.dark_prob,
      cfg.heralding.detectors[0].dark_prob,
      cfg.heralding.detectors[0].deadtime_s, f);
  row.analytic["car_model"] = model.car;
  row.analytic["signal_rate_model_cps"] = model.signal_singles_cps;
  row.analytic["idler_rate_model_cps"] = model.idler_singles_cps;
}

void fill_g2_vs_herald_row(const SystemConfig& cfg2, SweepRow& row) {
  const double f = cfg2.source.clock_rate_hz;
  const SystemConfig cfg1 = single_arm_variant(cfg2);
  const Counters c2 = simulate(cfg2);
  const Counters c1 = simulate(cfg1);
  const auto h1 = estimators::herald_rate(c1, f);
  const auto h2 = estimators::herald_rate(c2, f);
  row.metrics["herald_rate_m1_cps"] = h1;
  row.metrics["herald_rate_m2_cps"] = h2;
  add_g2(row, "g2_m1", c1);
  add_g2(row, "g2_m2", c2);
  row.metrics["herald_gain_pct"] = ratio_gain_pct(h2, h1);

  const double mu = cfg2.source.mu;
  const double b = total_heralding_beta(cfg2);
  const double tau = cfg2.heralding.detectors[0].deadtime_s;
  row.analytic["herald_rate_model_m1_cps"] =
      analytic::psm_heralding_rate(mu, b, herald_dark(cfg2), f, 1, tau);
  row.analytic["psm_rate_model_m2_cps"] =
      analytic::psm_heralding_rate(mu, b, herald_dark(cfg2), f, 2, tau);
  row.analytic["herald_rate_model_m2_cps"] = analytic_trigger_rate(cfg2);
}

void fill_receiver_counts_row(const SystemConfig& cfg2, SweepRow& row) {
  const double f = cfg2.source.clock_rate_hz;
  const SystemConfig cfg1 = single_arm_variant(cfg2);
  const SystemConfig count2 = counting_receiver_variant(cfg2);
  const SystemConfig count1 = counting_receiver_variant(cfg1);

  const Counters c2 = simulate(cfg2);
  const Counters c1 = simulate(cfg1);
  const Counters k2 = simulate(count2);
  const Counters k1 = simulate(count1);

  add_g2(row, "g2_m1", c1);
  add_g2(row, "g2_m2", c2);
  const auto h1 = estimators::herald_rate(c1, f);
  const auto h2 = estimators::herald_rate(c2, f);
  row.metrics["herald_rate_m1_cps"] = h1;
  row.metrics["herald_rate_m2_cps"] = h2;
  row.metrics["herald_gain_pct"] = ratio_gain_pct(h2, h1);
  const auto r1 = receiver_total_rate(k1, f);
  const auto r2 = receiver_total_rate(k2, f);
  row.metrics["receiver_rate_m1_cps"] = r1;
  row.metrics["receiver_rate_m2_cps"] = r2;
  row.metrics["receiver_gain_pct"] = ratio_gain_pct(r2, r1);

  row.analytic["receiver_rate_model_m1_cps"] = analytic_receiver_rate(count1);
  row.analytic["receiver_rate_model_m2_cps"] = analytic_receiver_rate(count2);
}

void fill_herald_deadtime_row(const SystemConfig& cfg2, SweepRow& row) {
  const double f = cfg2.source.clock_rate_hz;
  const SystemConfig cfg1 = single_arm_variant(cfg2);
  const Counters c2 = simulate(cfg2);
  const Counters c1 = simulate(cfg1);
  const auto h1 = estimators::herald_rate(c1, f);
  const auto h2 = estimators::herald_rate(c2, f);
  row.metrics["herald_rate_m1_cps"] = h1;
  row.metrics["herald_rate_m2_cps"] = h2;

  const double mu = cfg2.source.mu;
  const double b = total_heralding_beta(cfg2);
  const double d = herald_dark(cfg2);
  const double tau = cfg2.heralding.detectors[0].deadtime_s;
  const double m1_tau = analytic::psm_heralding_rate(mu, b, d, f, 1, tau);
  const double m2_tau = analytic::psm_heralding_rate(mu, b, d, f, 2, tau);
  const double m1_0 = analytic::psm_heralding_rate(mu, b, d, f, 1, 0.0);
  const double m2_0 = analytic::psm_heralding_rate(mu, b, d, f, 2, 0.0);
  row.analytic["herald_rate_model_m1_cps"] = m1_tau;
  row.analytic["psm_rate_model_m2_cps"] = m2_tau;
  row.analytic["herald_rate_zero_deadtime_m1_cps"] = m1_0;
  row.analytic["psm_rate_zero_deadtime_m2_cps"] = m2_0;

  MetricEstimate ratio1;
  ratio1.value = h1.value / m1_0;
  ratio1.std_error = h1.std_error / m1_0;
  ratio1.n_samples = h1.n_samples;
  MetricEstimate ratio2;
  ratio2.value = h2.value / m2_0;
  ratio2.std_error = h2.std_error / m2_0;
  ratio2.n_samples = h2.n_samples;
  row.metrics["ratio_to_zero_deadtime_m1"] = ratio1;
  row.metrics["ratio_to_zero_deadtime_m2"] = ratio2;
}

void fill_receiver_deadtime_row(const SystemConfig& cfg2, SweepRow& row) {
  const double f = cfg2.source.clock_rate_hz;
  const SystemConfig cfg1 = single_arm_variant(cfg2);
  const Counters c2 = simulate(cfg2);
  const Counters c1 = simulate(cfg1);
  const auto r1 = receiver_total_rate(c1, f);
  const auto r2 = receiver_total_rate(c2, f);
  row.metrics["receiver_rate_m1_cps"] = r1;
  row.metrics["receiver_rate_m2_cps"] = r2;
  row.metrics["receiver_gain_pct"] = ratio_gain_pct(r2, r1);
  row.metrics["herald_rate_m1_cps"] = estimators::herald_rate(c1, f);
  row.metrics["herald_rate_m2_cps"] = estimators::herald_rate(c2, f);
  row.analytic["receiver_rate_model_m1_cps"] = analytic_receiver_rate(cfg1);
  row.analytic["receiver_rate_model_m2_cps"] = analytic_receiver_rate(cfg2);
}

// Noise-pair machinery shared by the QBER/PSNR scenarios and the
// attenuation comparison. One noise-off run per replicate; the on-runs
// share its seeds so every level sees the same transmitter history.
struct NoisePairData {
  std::vector<Counters> on;  // per level
  Counters off;
};

NoisePairData run_noise_levels(const SystemConfig& base,
                               const std::vector<double>& levels,
                               std::uint64_t seed, int workers) {
  NoisePairData data;
  data.on.resize(levels.size());
  SystemConfig cfg = base;
  cfg.seed = seed;

  std::vector<std::function<void()>> tasks;
  tasks.emplace_back([&]() {
    SystemConfig off = cfg;
    off.receiver.noise_prob_per_gate = 0.0;
    data.off = simulate(off);
  });
  for (std::size_t i = 0; i < levels.size(); ++i) {
    tasks.emplace_back([&, i]() {
      if (levels[i] == 0.0) return;  // equals the off run, filled later
      SystemConfig on = cfg;
      on.receiver.noise_prob_per_gate = levels[i];
      data.on[i] = simulate(on);
    });
  }
  parallel_for(tasks.size(), workers, [&](std::size_t i) { tasks[i](); });
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == 0.0) data.on[i] = data.off;
  }
  return data;
}

void fill_noise_row(const SystemConfig& cfg, const Counters& on,
                    const Counters& off, SweepRow& row) {
  const double f = cfg.source.clock_rate_hz;
  add_g2(row, "g2_on", on);
  add_g2(row, "g2_off", off);
  row.metrics["receiver_on_cps"] = receiver_total_rate(on, f);
  row.metrics["receiver_off_cps"] = receiver_total_rate(off, f);
  row.metrics["herald_rate_cps"] = estimators::herald_rate(on, f);
  row.metrics["signal_delivered_cps"] = estimators::rate_from_counts(
      on.signal_photons_delivered, on.slots, f);

  const auto s = row.metrics["receiver_off_cps"];
  const auto t = row.metrics["receiver_on_cps"];
  MetricEstimate noise_rate;
  noise_rate.value = t.value - s.value;
  noise_rate.std_error =
      std::sqrt(t.std_error * t.std_error + s.std_error * s.std_error);
  noise_rate.n_samples = std::min(t.n_samples, s.n_samples);
  row.metrics["noise_rate_cps"] = noise_rate;

  try {
    const auto [psnr, qber] = estimators::psnr_qber_estimate(on, off);
    row.metrics["psnr"] = psnr;
    row.metrics["qber"] = qber;
    const double chi = analytic::chi_improvement(
        cfg.receiver.channel_transmittance, cfg.source.mu);
    row.analytic["chi"] = chi;
    row.analytic["psnr_wcs_model"] = psnr.value / chi;
    row.analytic["qber_wcs_model"] =
        analytic::qber_from_psnr(psnr.value / chi);
  } catch (const std::exception& e) {
    row.errors["psnr"] = e.what();
    row.errors["qber"] = e.what();
  }
}

std::vector<SweepRow> run_noise_sweep(const SweepSpec& spec) {
  std::vector<SweepRow> rows;
  for (int rep = 0; rep < spec.replicates; ++rep) {
    const std::uint64_t seed = row_seed(spec.base.seed, 0, rep);
    NoisePairData data =
        run_noise_levels(spec.base, spec.axis_values, seed, spec.workers);
    for (std::size_t i = 0; i < spec.axis_values.size(); ++i) {
      SweepRow row = make_row_shell(spec, static_cast<int>(i), rep);
      row.seed = seed;
      SystemConfig cfg = row_config(spec, row);
      row.config_digest = config_io::config_digest(cfg);
      fill_noise_row(cfg, data.on[i], data.off, row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SweepRow> run_qber_vs_deadtime(const SweepSpec& spec) {
  const std::vector<double> taus = {1e-6, 5e-6, 10e-6};
  struct Variant {
    double tau;
    bool afterpulse;
    NoisePairData data;
    SystemConfig cfg;
  };
  std::vector<Variant> variants;
  for (double tau : taus) {
    for (int ap = 0; ap < 2; ++ap) {
      Variant v;
      v.tau = tau;
      v.afterpulse = ap == 1;
      v.cfg = spec.base;
      for (auto& d : v.cfg.heralding.detectors) d.deadtime_s = tau;
      if (v.afterpulse) v.cfg = with_afterpulsing(v.cfg);
      variants.push_back(std::move(v));
    }
  }
  // One shared seed keeps all variants on the same transmitter history.
  const std::uint64_t seed = row_seed(spec.base.seed, 0, 0);
  parallel_for(variants.size(), spec.workers, [&](std::size_t i) {
    variants[i].data =
        run_noise_levels(variants[i].cfg, spec.axis_values, seed, 1);
  });

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < spec.axis_values.size(); ++i) {
    SweepRow row = make_row_shell(spec, static_cast<int>(i), 0);
    row.seed = seed;
    row.config_digest = config_io::config_digest(spec.base);
    for (const auto& v : variants) {
      const int tau_us = static_cast<int>(std::lround(v.tau * 1e6));
      const std::string suffix =
          "_tau" + std::to_string(tau_us) + "us_ap" + (v.afterpulse ? "1" : "0");
      try {
        const auto [psnr, qber] =
            estimators::psnr_qber_estimate(v.data.on[i], v.data.off);
        row.metrics["qber" + suffix] = qber;
        row.metrics["psnr" + suffix] = psnr;
      } catch (const std::exception& e) {
        row.errors["qber" + suffix] = e.what();
      }
      if (v.afterpulse) {
        const Counters& on = v.data.on[i];
        const double noise_total =
            static_cast<double>(on.noise_det3 + on.noise_det4);
        const double ap_noise = static_cast<double>(on.noise_det_ap_herald);
        MetricEstimate frac;
        frac.n_samples = on.slots;
        if (noise_total > ap_noise) {
          frac.value = ap_noise / (noise_total - ap_noise);
          frac.std_error = frac.value / std::sqrt(std::max(ap_noise, 1.0));
        }
        row.metrics["noise_ap_over_n_tau" + std::to_string(tau_us) + "us"] =
            frac;
      }
    }
    // QBER shift caused by enabling afterpulsing, per deadtime.
    for (double tau : taus) {
      const int tau_us = static_cast<int>(std::lround(tau * 1e6));
      const std::string base_key = "qber_tau" + std::to_string(tau_us);
      auto a = row.metrics.find(base_key + "us_ap0");
      auto b = row.metrics.find(base_key + "us_ap1");
      if (a != row.metrics.end() && b != row.metrics.end()) {
        MetricEstimate d;
        d.value = b->second.value - a->second.value;
        d.std_error = std::sqrt(a->second.std_error * a->second.std_error +
                                b->second.std_error * b->second.std_error);
        d.n_samples = a->second.n_samples;
        row.metrics["dqber_tau" + std::to_string(tau_us) + "us"] = d;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> validation_rows(const SweepSpec& spec);

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::car_vs_flux: return "car-vs-flux";
    case Scenario::g2_vs_herald_rate: return "g2-vs-herald-rate";
    case Scenario::receiver_counts_vs_g2: return "receiver-counts-vs-g2";
    case Scenario::qber_vs_g2: return "qber-vs-g2";
    case Scenario::psnr_vs_noise: return "psnr-vs-noise";
    case Scenario::herald_rate_vs_deadtime: return "herald-rate-vs-deadtime";
    case Scenario::receiver_rate_vs_deadtime:
      return "receiver-rate-vs-deadtime";
    case Scenario::qber_vs_deadtime: return "qber-vs-deadtime";
    case Scenario::validation_matrix: return "validate";
  }
  return "unknown";
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (int i = 0; i <= static_cast<int>(Scenario::validation_matrix); ++i) {
    names.push_back(scenario_name(static_cast<Scenario>(i)));
  }
  return names;
}

std::optional<Scenario> scenario_from_name(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(Scenario::validation_matrix); ++i) {
    if (scenario_name(static_cast<Scenario>(i)) == name) {
      return static_cast<Scenario>(i);
    }
  }
  return std::nullopt;
}

std::uint64_t row_seed(std::uint64_t base_seed, int axis_index,
                       int replicate) {
  return mix64(base_seed ^
               mix64((static_cast<std::uint64_t>(axis_index) + 1) *
                     kStreamGolden) ^
               mix64((static_cast<std::uint64_t>(replicate) + 1) *
                     kStreamLeaf));
}

SystemConfig single_arm_variant(const SystemConfig& base) {
  SystemConfig cfg = base;
  double t = 0.0;
  for (double v : base.heralding.arm_transmittance) t += v;
  cfg.heralding.m = 1;
  cfg.heralding.arm_transmittance = {t};
  cfg.heralding.detectors = {base.heralding.detectors[0]};
  return cfg;
}

SystemConfig counting_receiver_variant(const SystemConfig& base) {
  SystemConfig cfg = base;
  cfg.receiver.hbt_split = 1.0;
  cfg.receiver.detector3.efficiency = 1.0;
  cfg.receiver.detector3.dark_prob = 0.0;
  cfg.receiver.detector4.efficiency = 0.0;
  cfg.receiver.detector4.dark_prob = 0.0;
  cfg.receiver.detector4.deadtime_s = 0.0;
  return cfg;
}

SystemConfig coupler_loss_variant(const SystemConfig& base, double excess_db,
                                  double second_arm_relative) {
  SystemConfig cfg = base;
  const double loss = std::pow(10.0, -excess_db / 10.0);
  for (auto& t : cfg.heralding.arm_transmittance) t *= loss;
  if (cfg.heralding.m >= 2) {
    cfg.heralding.detectors[1].efficiency *= second_arm_relative;
  }
  return cfg;
}

SystemConfig with_afterpulsing(const SystemConfig& base) {
  SystemConfig cfg = base;
  for (auto& d : cfg.heralding.detectors) {
    d.afterpulse_amplitude = kAfterpulseAmplitude;
    d.afterpulse_tau_s = kAfterpulseTauS;
  }
  return cfg;
}

SweepSpec default_sweep(Scenario s) {
  SweepSpec spec;
  spec.scenario = s;
  spec.base = config_io::paper_default_profile();
  spec.replicates = 3;

  switch (s) {
    case Scenario::car_vs_flux: {
      // Signal/idler coincidence bench: one idler arm at -13 dB, a
      // free-running signal detector behind the same loss, dark counts from
      // the source characterization. Flux range picked so accidentals are
      // countable in 2e8 slots.
      SystemConfig& c = spec.base;
      const double beta = std::pow(10.0, -1.3);
      c.heralding.m = 1;
      c.heralding.arm_transmittance = {beta};
      c.heralding.detectors = {c.heralding.detectors[0]};
      c.heralding.detectors[0].dark_prob = 5.5e-6;
      c.heralding.xor_deadtime_s = 0.0;
      c.receiver.triggered = false;
      c.receiver.channel_transmittance = beta;
      c.receiver.hbt_split = 1.0;
      c.receiver.detector3.efficiency = 1.0;
      c.receiver.detector3.dark_prob = 1.0e-5;
      c.receiver.detector4.efficiency = 0.0;
      c.receiver.detector4.dark_prob = 0.0;
      c.receiver.detector4.deadtime_s = 0.0;
      c.n_slots = 200'000'000;
      spec.axis = "source.mu";
      spec.axis_values = {0.02, 0.05, 0.1, 0.2, 0.3};
      spec.replicates = 1;
      break;
    }
    case Scenario::g2_vs_herald_rate:
    case Scenario::receiver_counts_vs_g2: {
      spec.base.n_slots = 30'000'000;
      spec.axis = "source.mu";
      spec.axis_values = {0.04, 0.08, 0.12, 0.16, 0.20, 0.30};
      break;
    }
    case Scenario::qber_vs_g2:
    case Scenario::psnr_vs_noise: {
      spec.base.n_slots = 30'000'000;
      spec.axis = "receiver.noise_prob_per_gate";
      spec.axis_values = default_noise_grid();
      spec.replicates = 1;
      break;
    }
    case Scenario::herald_rate_vs_deadtime: {
      // Reduced flux keeps the 1 us point above 90% of the no-deadtime
      // rate; the veto deadtime is trigger electronics outside this study.
      spec.base.source.mu = 0.075;
      spec.base.heralding.xor_deadtime_s = 0.0;
      spec.base.n_slots = 100'000'000;
      spec.axis = "heralding.detector.deadtime_s";
      spec.axis_values = {0.0, 1e-6, 2e-6, 5e-6, 10e-6};
      spec.replicates = 1;
      break;
    }
    case Scenario::receiver_rate_vs_deadtime: {
      spec.base.source.mu = 0.075;
      spec.base.heralding.xor_deadtime_s = 0.0;
      spec.base = counting_receiver_variant(spec.base);
      spec.base.n_slots = 100'000'000;
      spec.axis = "heralding.detector.deadtime_s";
      spec.axis_values = {1e-6, 2e-6, 5e-6, 10e-6};
      spec.replicates = 1;
      break;
    }
    case Scenario::qber_vs_deadtime: {
      spec.base.n_slots = 20'000'000;
      spec.axis = "receiver.noise_prob_per_gate";
      spec.axis_values = {0.05, 0.10, 0.20, 0.30, 0.45, 0.60};
      spec.replicates = 1;
      break;
    }
    case Scenario::validation_matrix: {
      spec.axis = "source.mu";
      spec.axis_values = {0.01, 0.05, 0.12, 0.3};
      spec.replicates = 1;
      break;
    }
  }
  return spec;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  validate_spec(spec);

  switch (spec.scenario) {
    case Scenario::qber_vs_g2:
    case Scenario::psnr_vs_noise:
      return run_noise_sweep(spec);
    case Scenario::qber_vs_deadtime:
      return run_qber_vs_deadtime(spec);
    case Scenario::validation_matrix:
      return validation_rows(spec);
    default:
      break;
  }

  const std::size_t n_rows =
      spec.axis_values.size() * static_cast<std::size_t>(spec.replicates);
  std::vector<SweepRow> rows(n_rows);
  parallel_for(n_rows, spec.workers, [&](std::size_t idx) {
    const int axis_idx = static_cast<int>(idx / spec.replicates);
    const int rep = static_cast<int>(idx % spec.replicates);
    SweepRow row = make_row_shell(spec, axis_idx, rep);
    const SystemConfig cfg = row_config(spec, row);
    row.config_digest = config_io::config_digest(cfg);
    switch (spec.scenario) {
      case Scenario::car_vs_flux:
        fill_car_row(cfg, row);
        break;
      case Scenario::g2_vs_herald_rate:
        fill_g2_vs_herald_row(cfg, row);
        break;
      case Scenario::receiver_counts_vs_g2:
        fill_receiver_counts_row(cfg, row);
        break;
      case Scenario::herald_rate_vs_deadtime:
        fill_herald_deadtime_row(cfg, row);
        break;
      case Scenario::receiver_rate_vs_deadtime:
        fill_receiver_deadtime_row(cfg, row);
        break;
      default:
        break;
    }
    rows[idx] = std::move(row);
  });
  return rows;
}

// --- validation matrix ------------------------------------------------------

namespace {

SystemConfig validation_cell_config(const ValidationOptions& opt, double mu,
                                    double tau, int m, std::uint64_t seed) {
  SystemConfig cfg;
  cfg.source.mu = mu;
  cfg.source.clock_rate_hz = opt.clock_rate_hz;
  cfg.source.pair_distribution = PairDistribution::poisson;
  cfg.heralding.m = m;
  cfg.heralding.arm_transmittance.assign(m, opt.beta_total / m);
  DetectorParams det;
  det.efficiency = 1.0;
  det.deadtime_s = tau;
  det.dark_prob = 0.0;
  det.afterpulse_amplitude = 0.0;
  cfg.heralding.detectors.assign(m, det);
  cfg.heralding.xor_deadtime_s = 0.0;
  cfg.receiver.channel_transmittance = opt.channel_transmittance;
  cfg.receiver.noise_prob_per_gate = 0.0;
  cfg.receiver.hbt_split = 1.0;
  cfg.receiver.detector3.efficiency = opt.receiver_efficiency;
  cfg.receiver.detector3.deadtime_s = tau;  // all detector deadtimes equal
  cfg.receiver.detector3.dark_prob = 0.0;
  cfg.receiver.detector3.afterpulse_amplitude = 0.0;
  cfg.receiver.detector4 = DetectorParams{};
  cfg.receiver.detector4.efficiency = 0.0;
  cfg.receiver.detector4.deadtime_s = 0.0;
  cfg.receiver.triggered = true;
  cfg.seed = seed;
  cfg.n_slots = opt.min_slots;
  return cfg;
}

double rel_3sigma(std::int64_t counts) {
  return counts > 0 ? 3.0 / std::sqrt(static_cast<double>(counts)) : 1.0;
}

}  // namespace

ValidationReport run_validation_matrix(const ValidationOptions& opt) {
  struct CellTask {
    double mu;
    double tau;
    int m;
    std::uint64_t seed;
    SystemConfig cfg;
    double arm_model = 0.0, psm_model = 0.0, herald_model = 0.0,
           coinc_model = 0.0, recv_model = 0.0;
  };

  std::vector<CellTask> tasks;
  std::uint64_t idx = 0;
  for (double mu : opt.mus) {
    for (double tau : opt.deadtimes_s) {
      for (int m : opt.arm_counts) {
        CellTask t;
        t.mu = mu;
        t.tau = tau;
        t.m = m;
        t.seed = mix64(opt.seed ^ mix64((idx + 1) * 0x5851F42D4C957F2DULL));
        t.cfg = validation_cell_config(opt, mu, tau, m, t.seed);

        const double f = opt.clock_rate_hz;
        const double b_arm = opt.beta_total / m;
        t.arm_model = analytic::deadtime_limited_rate(
            analytic::triggering_rate(mu, b_arm, 0.0, f), tau);
        t.psm_model = analytic::psm_heralding_rate(mu, opt.beta_total, 0.0, f,
                                                   m, tau);
        t.herald_model = analytic_trigger_rate(t.cfg);
        t.coinc_model =
            m >= 2 ? t.arm_model * t.arm_model / f : 0.0;
        t.recv_model = analytic_receiver_rate(t.cfg);

        // Size the cell so each compared tally reaches its target count.
        const double slot_s = 1.0 / f;
        double needed = static_cast<double>(opt.min_slots);
        needed = std::max(needed,
                          opt.herald_count_target / (t.herald_model * slot_s));
        needed = std::max(needed,
                          opt.arm_count_target / (t.arm_model * slot_s));
        needed = std::max(needed,
                          opt.receiver_count_target / (t.recv_model * slot_s));
        t.cfg.n_slots = static_cast<std::int64_t>(std::ceil(needed));
        tasks.push_back(std::move(t));
        ++idx;
      }
    }
  }

  // Heaviest cells first so the pool stays busy.
  std::vector<std::size_t> order(tasks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tasks[a].cfg.n_slots > tasks[b].cfg.n_slots;
  });

  std::vector<ValidationCell> cells(tasks.size());
  parallel_for(tasks.size(), opt.workers, [&](std::size_t oi) {
    const CellTask& t = tasks[order[oi]];
    const Counters c = simulate(t.cfg);
    const double f = opt.clock_rate_hz;
    const double elapsed = static_cast<double>(c.slots) / f;

    ValidationCell cell;
    cell.mu = t.mu;
    cell.deadtime_s = t.tau;
    cell.m = t.m;
    cell.slots = c.slots;
    cell.seed = t.seed;

    std::int64_t psm_counts = 0;
    double worst_arm_dev = 0.0, worst_arm_sig = 0.0;
    for (int i = 0; i < t.m; ++i) {
      psm_counts += c.det_arm[i];
      const double rate = static_cast<double>(c.det_arm[i]) / elapsed;
      const double dev = rate / t.arm_model - 1.0;
      if (std::abs(dev) > std::abs(worst_arm_dev)) {
        worst_arm_dev = dev;
        worst_arm_sig = rel_3sigma(c.det_arm[i]);
      }
    }
    cell.arm_dev_max = worst_arm_dev;
    cell.arm_3sigma_max = worst_arm_sig;

    cell.psm_rate_mc = static_cast<double>(psm_counts) / elapsed;
    cell.psm_rate_model = t.psm_model;
    cell.psm_dev = cell.psm_rate_mc / cell.psm_rate_model - 1.0;
    cell.psm_3sigma = rel_3sigma(psm_counts);

    cell.herald_mc = static_cast<double>(c.heralds) / elapsed;
    cell.herald_model = t.herald_model;
    cell.herald_dev = cell.herald_mc / cell.herald_model - 1.0;
    cell.herald_3sigma = rel_3sigma(c.heralds);

    if (t.m >= 2) {
      cell.coinc_mc = static_cast<double>(c.coincidences_12) / elapsed;
      cell.coinc_model = t.coinc_model;
      cell.coinc_dev = cell.coinc_mc / cell.coinc_model - 1.0;
      cell.coinc_3sigma = rel_3sigma(c.coincidences_12);
    }

    cell.recv_mc = static_cast<double>(c.det3) / elapsed;
    cell.recv_model = t.recv_model;
    cell.recv_dev = cell.recv_mc / cell.recv_model - 1.0;
    cell.recv_3sigma = rel_3sigma(c.det3);

    cell.pass = true;
    auto flag = [&cell](const char* name) {
      cell.pass = false;
      if (!cell.flags.empty()) cell.flags += "+";
      cell.flags += name;
    };
    if (std::abs(cell.psm_dev) > 0.01) flag("psm");
    if (std::abs(cell.arm_dev_max) > 0.01) flag("arm");
    if (std::abs(cell.herald_dev) > 0.01) flag("herald");
    if (std::abs(cell.recv_dev) > 0.05) flag("receiver");
    if (t.m >= 2 &&
        std::abs(cell.coinc_dev) > std::max(0.01, cell.coinc_3sigma)) {
      flag("coincidence");
    }
    cells[order[oi]] = std::move(cell);
  });

  ValidationReport report;
  report.cells = std::move(cells);
  report.all_pass = true;
  for (const auto& cell : report.cells) {
    report.max_psm_dev = std::max(report.max_psm_dev, std::abs(cell.psm_dev));
    report.max_arm_dev =
        std::max(report.max_arm_dev, std::abs(cell.arm_dev_max));
    report.max_herald_dev =
        std::max(report.max_herald_dev, std::abs(cell.herald_dev));
    report.max_recv_dev =
        std::max(report.max_recv_dev, std::abs(cell.recv_dev));
    report.total_slots += cell.slots;
    report.all_pass = report.all_pass && cell.pass;
  }
  return report;
}

namespace {

std::vector<SweepRow> validation_rows(const SweepSpec& spec) {
  ValidationOptions opt;
  opt.mus = spec.axis_values;
  opt.seed = spec.base.seed;
  opt.workers = spec.workers;
  const ValidationReport report = run_validation_matrix(opt);

  std::vector<SweepRow> rows;
  int i = 0;
  for (const auto& cell : report.cells) {
    SweepRow row;
    row.axis_value = cell.mu;
    row.replicate = 0;
    row.seed = cell.seed;
    auto set = [&row](const std::string& name, double v, double err = 0.0) {
      MetricEstimate e;
      e.value = v;
      e.std_error = err;
      row.metrics[name] = e;
    };
    set("deadtime_us", cell.deadtime_s * 1e6);
    set("m", cell.m);
    set("slots", static_cast<double>(cell.slots));
    set("psm_rate_mc_cps", cell.psm_rate_mc,
        cell.psm_rate_mc * cell.psm_3sigma / 3.0);
    row.analytic["psm_rate_model_cps"] = cell.psm_rate_model;
    set("psm_dev_pct", cell.psm_dev * 100.0, cell.psm_3sigma * 100.0 / 3.0);
    set("arm_dev_max_pct", cell.arm_dev_max * 100.0,
        cell.arm_3sigma_max * 100.0 / 3.0);
    set("herald_rate_mc_cps", cell.herald_mc,
        cell.herald_mc * cell.herald_3sigma / 3.0);
    row.analytic["herald_rate_model_cps"] = cell.herald_model;
    set("herald_dev_pct", cell.herald_dev * 100.0,
        cell.herald_3sigma * 100.0 / 3.0);
    set("coinc_rate_mc_cps", cell.coinc_mc);
    row.analytic["coinc_rate_model_cps"] = cell.coinc_model;
    set("coinc_dev_pct", cell.coinc_dev * 100.0,
        cell.coinc_3sigma * 100.0 / 3.0);
    set("receiver_rate_mc_cps", cell.recv_mc,
        cell.recv_mc * cell.recv_3sigma / 3.0);
    row.analytic["receiver_rate_model_cps"] = cell.recv_model;
    set("receiver_dev_pct", cell.recv_dev * 100.0,
        cell.recv_3sigma * 100.0 / 3.0);
    set("pass", cell.pass ? 1.0 : 0.0);
    if (!cell.flags.empty()) row.errors["tolerance"] = cell.flags;
    rows.push_back(std::move(row));
    ++i;
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> run_attenuation_comparison(const SystemConfig& base,
                                                 double attenuation_db,
                                                 int replicates, int workers) {
  if (attenuation_db < 0.0) {
    throw ConfigError("attenuation_db must be >= 0");
  }
  const double scale = std::pow(10.0, -attenuation_db / 10.0);
  const std::vector<double> levels = default_noise_grid();

  std::vector<SweepRow> rows;
  for (int rep = 0; rep < replicates; ++rep) {
    const std::uint64_t seed = row_seed(base.seed, 0, rep);
    SystemConfig att = base;
    att.receiver.channel_transmittance *= scale;

    NoisePairData base_data = run_noise_levels(base, levels, seed, workers);
    NoisePairData att_data = run_noise_levels(att, levels, seed, workers);

    for (std::size_t i = 0; i < levels.size(); ++i) {
      SweepRow row;
      row.axis_value = levels[i];
      row.replicate = rep;
      row.seed = seed;
      row.config_digest = config_io::config_digest(base);

      SweepRow base_row, att_row;
      fill_noise_row(base, base_data.on[i], base_data.off, base_row);
      fill_noise_row(att, att_data.on[i], att_data.off, att_row);
      for (const auto& [k, v] : base_row.metrics) row.metrics[k + "_base"] = v;
      for (const auto& [k, v] : att_row.metrics) row.metrics[k + "_att"] = v;
      for (const auto& [k, v] : base_row.errors) row.errors[k + "_base"] = v;
      for (const auto& [k, v] : att_row.errors) row.errors[k + "_att"] = v;

      // The attenuated run thins the same delivered photons, so the ratio
      // is a binomial fraction of the base count.
      const double d_base =
          static_cast<double>(base_data.on[i].signal_photons_delivered);
      const double d_att =
          static_cast<double>(att_data.on[i].signal_photons_delivered);
      MetricEstimate ratio;
      if (d_base > 0.0) {
        ratio.value = d_att / d_base;
        ratio.std_error =
            std::sqrt(std::max(ratio.value * (1.0 - ratio.value), 0.0) /
                      d_base);
        ratio.n_samples = base_data.on[i].slots;
      }
      row.metrics["delivered_ratio"] = ratio;
      row.analytic["delivered_ratio_model"] = scale;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace experiments
}  // namespace hsim
