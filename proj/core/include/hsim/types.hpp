#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsim {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class PairDistribution { poisson, thermal };

// Per-slot pair-emission statistics of the source.
struct SourceParams {
  double mu = 0.12;                 // mean photon-pair number per clock slot
  double clock_rate_hz = 48.7e6;    // system clock F
  PairDistribution pair_distribution = PairDistribution::poisson;
};

// One gated single-photon detector. Deadtime is non-paralyzable: a detection
// in slot k blinds the detector for the following deadtime_slots slots, and
// arrivals during the blind window do not extend it.
struct DetectorParams {
  double efficiency = 1.0;          // detection probability per incident photon
  double deadtime_s = 10e-6;
  double dark_prob = 0.0;           // dark-count probability per gate
  double afterpulse_amplitude = 0.0;   // 0 disables afterpulsing exactly
  double afterpulse_tau_s = 0.5e-6;    // afterpulse decay constant

  // Filled by validate_config.
  std::int64_t deadtime_slots = 0;
};

// Transmitter heralding arm: 1xm passive splitter feeding m detectors whose
// outputs drive the exclusive-or veto circuit.
struct HeraldingArmConfig {
  int m = 2;
  std::vector<double> arm_transmittance;  // includes 1/m split + excess loss
  std::vector<DetectorParams> detectors;
  double xor_deadtime_s = 120e-9;

  std::int64_t xor_deadtime_slots = 0;  // filled by validate_config
};

// Channel plus Hanbury-Brown-Twiss receiver. With triggered=true the
// receiver gates open only on a herald signal.
struct ReceiverConfig {
  double channel_transmittance = 0.745;
  double noise_prob_per_gate = 0.0;   // at most one noise photon per gate
  double hbt_split = 0.5;             // fraction routed to detector 3
  DetectorParams detector3;
  DetectorParams detector4;
  bool triggered = true;
};

struct SystemConfig {
  SourceParams source;
  HeraldingArmConfig heralding;
  ReceiverConfig receiver;
  std::uint64_t seed = 123456789ULL;
  std::int64_t n_slots = 10'000'000;
};

// Slot tallies accumulated by one simulation run. All counts are exact
// integers; estimators turn them into rates and dimensionless metrics.
struct Counters {
  std::int64_t slots = 0;

  std::vector<std::int64_t> det_arm;        // firings per heralding detector
  std::vector<std::int64_t> dark_det;       // ... attributable to dark counts
  std::vector<std::int64_t> afterpulse_det; // ... attributable to afterpulses
  std::int64_t coincidences_12 = 0;  // slots with >= 2 heralding firings
  std::int64_t heralds = 0;          // XOR-accepted herald signals
  std::int64_t heralds_afterpulse = 0;  // heralds whose firing was an afterpulse

  std::int64_t det3 = 0;
  std::int64_t det4 = 0;
  std::int64_t triples = 0;          // herald && det3 && det4 in the same slot
  std::int64_t noise_det3 = 0;       // truth tag: fired on a noise photon
  std::int64_t noise_det4 = 0;
  std::int64_t dark_det3 = 0;
  std::int64_t dark_det4 = 0;
  std::int64_t signal_det_ap_herald = 0;  // signal detections under afterpulse heralds
  std::int64_t noise_det_ap_herald = 0;   // noise detections under afterpulse heralds
  std::int64_t signal_photons_delivered = 0;  // heralded photons surviving the channel

  std::int64_t car_true_coinc = 0;   // same-slot idler(det 1) x signal(det 3)
  std::int64_t car_accidental = 0;   // det 1 in slot k, det 3 in slot k+1

  void merge(const Counters& other);
};

// A point estimate with a first-order standard error.
struct MetricEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;
};

// Named bag of rates (counts/second) and dimensionless metrics. Analytic
// entries carry zero standard error.
struct RateReport {
  std::map<std::string, MetricEstimate> values;

  void set(const std::string& name, double value, double std_error = 0.0,
           std::int64_t n = 0) {
    values[name] = MetricEstimate{value, std_error, n};
  }
  bool has(const std::string& name) const { return values.count(name) != 0; }
  const MetricEstimate& at(const std::string& name) const;
};

// round-half-up of deadtime_s * clock_rate_hz; a detection in slot k blinds
// the detector for slots k+1 .. k+count.
std::int64_t deadtime_to_slots(double deadtime_s, double clock_rate_hz);

// Checks every invariant and fills the derived slot counts. Throws
// ConfigError naming the offending field. Idempotent.
SystemConfig validate_config(const SystemConfig& cfg);

}  // namespace hsim
