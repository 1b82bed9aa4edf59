#include "hsim/types.hpp"

#include <cmath>
#include <sstream>

namespace hsim {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_unit_interval(double v, const std::string& field, bool open_top) {
  if (open_top) {
    require(v >= 0.0 && v < 1.0, field + " must be in [0,1), got " + fmt(v));
  } else {
    require(v >= 0.0 && v <= 1.0, field + " must be in [0,1], got " + fmt(v));
  }
}

void validate_detector(const DetectorParams& d, const std::string& prefix) {
  check_unit_interval(d.efficiency, prefix + ".efficiency", false);
  require(d.deadtime_s >= 0.0, prefix + ".deadtime_s must be >= 0");
  check_unit_interval(d.dark_prob, prefix + ".dark_prob", true);
  check_unit_interval(d.afterpulse_amplitude, prefix + ".afterpulse_amplitude",
                      true);
  require(d.afterpulse_tau_s > 0.0, prefix + ".afterpulse_tau_s must be > 0");
}

}  // namespace

void Counters::merge(const Counters& other) {
  if (det_arm.empty()) {
    det_arm.resize(other.det_arm.size(), 0);
    dark_det.resize(other.dark_det.size(), 0);
    afterpulse_det.resize(other.afterpulse_det.size(), 0);
  }
  slots += other.slots;
  for (std::size_t i = 0; i < det_arm.size(); ++i) {
    det_arm[i] += other.det_arm[i];
    dark_det[i] += other.dark_det[i];
    afterpulse_det[i] += other.afterpulse_det[i];
  }
  coincidences_12 += other.coincidences_12;
  heralds += other.heralds;
  heralds_afterpulse += other.heralds_afterpulse;
  det3 += other.det3;
  det4 += other.det4;
  triples += other.triples;
  noise_det3 += other.noise_det3;
  noise_det4 += other.noise_det4;
  dark_det3 += other.dark_det3;
  dark_det4 += other.dark_det4;
  signal_det_ap_herald += other.signal_det_ap_herald;
  noise_det_ap_herald += other.noise_det_ap_herald;
  signal_photons_delivered += other.signal_photons_delivered;
  car_true_coinc += other.car_true_coinc;
  car_accidental += other.car_accidental;
}

const MetricEstimate& RateReport::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) {
    throw std::out_of_range("RateReport has no entry named '" + name + "'");
  }
  return it->second;
}

std::int64_t deadtime_to_slots(double deadtime_s, double clock_rate_hz) {
  if (deadtime_s < 0.0) throw ConfigError("deadtime_s must be >= 0");
  if (clock_rate_hz <= 0.0) throw ConfigError("clock_rate_hz must be > 0");
  return static_cast<std::int64_t>(std::floor(deadtime_s * clock_rate_hz + 0.5));
}

SystemConfig validate_config(const SystemConfig& in) {
  SystemConfig cfg = in;

  require(cfg.source.mu >= 0.0, "mu must be >= 0");
  require(cfg.source.clock_rate_hz > 0.0, "clock_rate_hz must be > 0");

  auto& h = cfg.heralding;
  require(h.m >= 1, "heralding.m must be >= 1");
  require(static_cast<int>(h.arm_transmittance.size()) == h.m,
          "heralding.arm_transmittance must have m entries (m=" +
              std::to_string(h.m) + ", got " +
              std::to_string(h.arm_transmittance.size()) + ")");
  require(static_cast<int>(h.detectors.size()) == h.m,
          "heralding.detectors must have m entries (m=" + std::to_string(h.m) +
              ", got " + std::to_string(h.detectors.size()) + ")");
  double total_t = 0.0;
  for (int i = 0; i < h.m; ++i) {
    check_unit_interval(h.arm_transmittance[i],
                        "heralding.arm_transmittance[" + std::to_string(i) + "]",
                        false);
    total_t += h.arm_transmittance[i];
  }
  require(total_t <= 1.0 + 1e-12, "splitter transmittance sums to " +
                                      fmt(total_t) + " > 1");
  require(h.xor_deadtime_s >= 0.0, "heralding.xor_deadtime_s must be >= 0");
  for (int i = 0; i < h.m; ++i) {
    validate_detector(h.detectors[i],
                      "heralding.detector[" + std::to_string(i) + "]");
  }

  auto& r = cfg.receiver;
  check_unit_interval(r.channel_transmittance, "receiver.channel_transmittance",
                      false);
  check_unit_interval(r.noise_prob_per_gate, "receiver.noise_prob_per_gate",
                      true);
  check_unit_interval(r.hbt_split, "receiver.hbt_split", false);
  validate_detector(r.detector3, "receiver.detector3");
  validate_detector(r.detector4, "receiver.detector4");
  // The receiver model has no afterpulse cause tag; reject rather than ignore.
  require(r.detector3.afterpulse_amplitude == 0.0,
          "receiver.detector3.afterpulse_amplitude must be 0 (receiver "
          "afterpulsing is not modeled)");
  require(r.detector4.afterpulse_amplitude == 0.0,
          "receiver.detector4.afterpulse_amplitude must be 0 (receiver "
          "afterpulsing is not modeled)");

  require(cfg.n_slots >= 1, "n_slots must be >= 1");

  const double f = cfg.source.clock_rate_hz;
  for (auto& d : cfg.heralding.detectors) {
    d.deadtime_slots = deadtime_to_slots(d.deadtime_s, f);
  }
  cfg.heralding.xor_deadtime_slots = deadtime_to_slots(h.xor_deadtime_s, f);
  cfg.receiver.detector3.deadtime_slots =
      deadtime_to_slots(r.detector3.deadtime_s, f);
  cfg.receiver.detector4.deadtime_slots =
      deadtime_to_slots(r.detector4.deadtime_s, f);

  return cfg;
}

}  // namespace hsim
