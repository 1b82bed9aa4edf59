#include "hsim/simulator.hpp"

#include <cmath>
#include <future>
#include <thread>

#include "hsim/rng.hpp"

namespace hsim {

namespace {

enum class Cause : std::uint8_t { none, photon, dark, afterpulse, noise };

struct DetectorRt {
  double efficiency = 1.0;
  double miss = 0.0;  // 1 - efficiency
  double dark_prob = 0.0;
  double ap_amplitude = 0.0;
  double ap_slot_rate = 0.0;  // 1 / (tau_ap * F)
  std::int64_t dead_slots = 0;
  bool ideal_efficiency = true;

  // state
  std::int64_t blind_until = -1;  // may fire when slot > blind_until
  std::int64_t last_fire = -1;

  void init(const DetectorParams& p, double clock_rate_hz) {
    efficiency = p.efficiency;
    miss = 1.0 - p.efficiency;
    dark_prob = p.dark_prob;
    ap_amplitude = p.afterpulse_amplitude;
    ap_slot_rate = 1.0 / (p.afterpulse_tau_s * clock_rate_hz);
    dead_slots = p.deadtime_slots;
    ideal_efficiency = p.efficiency >= 1.0;
    blind_until = -1;
    last_fire = -1;
  }

  // Decision for one slot given k photon arrivals. Returns the cause or
  // Cause::none. Blind detectors must be skipped by the caller.
  Cause decide(std::int64_t slot, int k, Xoshiro256pp& rng) {
    if (k > 0) {
      if (ideal_efficiency) return Cause::photon;
      double miss_all = miss;
      for (int j = 1; j < k; ++j) miss_all *= miss;
      if (rng.next_double() >= miss_all) return Cause::photon;
    }
    if (dark_prob > 0.0 && rng.bernoulli(dark_prob)) return Cause::dark;
    if (ap_amplitude > 0.0 && last_fire >= 0) {
      const double p =
          ap_amplitude *
          std::exp(-static_cast<double>(slot - last_fire) * ap_slot_rate);
      if (rng.bernoulli(p)) return Cause::afterpulse;
    }
    return Cause::none;
  }

  void register_fire(std::int64_t slot) {
    blind_until = slot + dead_slots;
    last_fire = slot;
  }
};

struct PairSampler {
  bool poisson = true;
  double p0 = 1.0;     // P(n = 0)
  double mu = 0.0;
  double ratio = 0.0;  // thermal: mu / (1 + mu)

  void init(const SourceParams& s) {
    poisson = s.pair_distribution == PairDistribution::poisson;
    mu = s.mu;
    if (poisson) {
      p0 = std::exp(-mu);
    } else {
      p0 = 1.0 / (1.0 + mu);
      ratio = mu / (1.0 + mu);
    }
  }

  int draw(Xoshiro256pp& rng) const {
    const double u = rng.next_double();
    if (u < p0) return 0;
    double p = p0;
    double cum = p0;
    int n = 0;
    if (poisson) {
      do {
        ++n;
        p *= mu / n;
        cum += p;
      } while (u >= cum && n < 64);
    } else {
      do {
        ++n;
        p *= ratio;
        cum += p;
      } while (u >= cum && n < 4096);
    }
    return n;
  }
};

struct EngineState {
  std::vector<DetectorRt> arm;
  DetectorRt recv3, recv4;
  std::int64_t xor_blind_until = -1;
  std::int64_t xor_dead_slots = 0;
};

bool stateless(const SystemConfig& cfg) {
  for (const auto& d : cfg.heralding.detectors) {
    if (d.deadtime_slots > 0 || d.afterpulse_amplitude > 0.0) return false;
  }
  if (cfg.heralding.xor_deadtime_slots > 0) return false;
  if (cfg.receiver.detector3.deadtime_slots > 0) return false;
  if (cfg.receiver.detector4.deadtime_slots > 0) return false;
  return true;
}

EngineState make_state(const SystemConfig& cfg) {
  EngineState st;
  const double f = cfg.source.clock_rate_hz;
  st.arm.resize(cfg.heralding.m);
  for (int i = 0; i < cfg.heralding.m; ++i) {
    st.arm[i].init(cfg.heralding.detectors[i], f);
  }
  st.recv3.init(cfg.receiver.detector3, f);
  st.recv4.init(cfg.receiver.detector4, f);
  st.xor_dead_slots = cfg.heralding.xor_deadtime_slots;
  return st;
}

// Simulates slots [first, first + count). State is carried in/out through
// `st`; counters are accumulated into `c`.
void run_block(const SystemConfig& cfg, std::int64_t first, std::int64_t count,
               std::uint64_t block_index, EngineState& st, Counters& c) {
  const int m = cfg.heralding.m;
  const auto& arm_t = cfg.heralding.arm_transmittance;
  const double t_ch = cfg.receiver.channel_transmittance;
  const double hbt = cfg.receiver.hbt_split;
  const double nu = cfg.receiver.noise_prob_per_gate;
  const bool triggered = cfg.receiver.triggered;
  const std::uint64_t seed = cfg.seed;

  PairSampler pairs;
  pairs.init(cfg.source);

  auto src = make_stream(seed, StreamId::source, block_index);
  auto split = make_stream(seed, StreamId::splitter, block_index);
  auto chan = make_stream(seed, StreamId::channel, block_index);
  auto noise = make_stream(seed, StreamId::noise, block_index);
  auto r3 = make_stream(seed, StreamId::receiver3, block_index);
  auto r4 = make_stream(seed, StreamId::receiver4, block_index);
  std::vector<Xoshiro256pp> det;
  det.reserve(m);
  for (int i = 0; i < m; ++i) {
    det.push_back(make_stream(seed, herald_stream(i), block_index));
  }

  std::vector<int> hits(m, 0);
  bool prev_arm0_fired = false;  // offset coincidences stay within the block
  const std::int64_t last = first + count;

  for (std::int64_t slot = first; slot < last; ++slot) {
    const int n = pairs.draw(src);
    if (n > 0) {
      for (int i = 0; i < m; ++i) hits[i] = 0;
      for (int j = 0; j < n; ++j) {
        const double u = split.next_double();
        double edge = 0.0;
        for (int i = 0; i < m; ++i) {
          edge += arm_t[i];
          if (u < edge) {
            ++hits[i];
            break;
          }
        }
      }
    }

    int fired_count = 0;
    int fired_arm = -1;
    Cause fired_cause = Cause::none;
    bool arm0_fired = false;
    for (int i = 0; i < m; ++i) {
      auto& d = st.arm[i];
      if (slot <= d.blind_until) continue;
      const Cause cause = d.decide(slot, n > 0 ? hits[i] : 0, det[i]);
      if (cause == Cause::none) continue;
      d.register_fire(slot);
      ++c.det_arm[i];
      if (cause == Cause::dark) ++c.dark_det[i];
      if (cause == Cause::afterpulse) ++c.afterpulse_det[i];
      ++fired_count;
      fired_arm = i;
      fired_cause = cause;
      if (i == 0) arm0_fired = true;
    }
    (void)fired_arm;

    if (fired_count >= 2) ++c.coincidences_12;
    bool herald = false;
    if (fired_count == 1) {
      if (m == 1) {
        herald = true;  // a single heralding detector needs no veto circuit
      } else if (slot > st.xor_blind_until) {
        herald = true;
        if (st.xor_dead_slots > 0) st.xor_blind_until = slot + st.xor_dead_slots;
      }
    }
    const bool ap_herald = herald && fired_cause == Cause::afterpulse;
    if (herald) {
      ++c.heralds;
      if (ap_herald) ++c.heralds_afterpulse;
    }

    bool f3 = false;
    if (triggered ? herald : true) {
      int arr3_sig = 0, arr4_sig = 0;
      if (n > 0) {
        int delivered = 0;
        for (int j = 0; j < n; ++j) {
          if (!chan.bernoulli(t_ch)) continue;
          ++delivered;
          if (chan.bernoulli(hbt)) {
            ++arr3_sig;
          } else {
            ++arr4_sig;
          }
        }
        c.signal_photons_delivered += delivered;
      }
      bool noise3 = false, noise4 = false;
      if (nu > 0.0 && noise.bernoulli(nu)) {
        if (noise.bernoulli(hbt)) {
          noise3 = true;
        } else {
          noise4 = true;
        }
      }

      Cause c3 = Cause::none, c4 = Cause::none;
      if (slot > st.recv3.blind_until) {
        c3 = st.recv3.decide(slot, arr3_sig + (noise3 ? 1 : 0), r3);
        if (c3 == Cause::photon && arr3_sig == 0) c3 = Cause::noise;
        if (c3 != Cause::none) st.recv3.register_fire(slot);
      }
      if (slot > st.recv4.blind_until) {
        c4 = st.recv4.decide(slot, arr4_sig + (noise4 ? 1 : 0), r4);
        if (c4 == Cause::photon && arr4_sig == 0) c4 = Cause::noise;
        if (c4 != Cause::none) st.recv4.register_fire(slot);
      }

      f3 = c3 != Cause::none;
      const bool f4 = c4 != Cause::none;
      if (f3) {
        ++c.det3;
        if (c3 == Cause::noise) ++c.noise_det3;
        if (c3 == Cause::dark) ++c.dark_det3;
      }
      if (f4) {
        ++c.det4;
        if (c4 == Cause::noise) ++c.noise_det4;
        if (c4 == Cause::dark) ++c.dark_det4;
      }
      if (herald && f3 && f4) ++c.triples;
      if (ap_herald) {
        if (c3 == Cause::photon) ++c.signal_det_ap_herald;
        if (c4 == Cause::photon) ++c.signal_det_ap_herald;
        if (c3 == Cause::noise) ++c.noise_det_ap_herald;
        if (c4 == Cause::noise) ++c.noise_det_ap_herald;
      }
    }

    if (arm0_fired && f3) ++c.car_true_coinc;
    if (prev_arm0_fired && f3) ++c.car_accidental;
    prev_arm0_fired = arm0_fired;
  }
  c.slots += count;
}

Counters make_counters(int m) {
  Counters c;
  c.det_arm.assign(m, 0);
  c.dark_det.assign(m, 0);
  c.afterpulse_det.assign(m, 0);
  return c;
}

}  // namespace

Counters simulate(const SystemConfig& raw) {
  const SystemConfig cfg = validate_config(raw);
  Counters c = make_counters(cfg.heralding.m);
  EngineState st = make_state(cfg);
  std::int64_t done = 0;
  std::uint64_t block = 0;
  while (done < cfg.n_slots) {
    const std::int64_t count = std::min(kBlockSlots, cfg.n_slots - done);
    run_block(cfg, done, count, block, st, c);
    done += count;
    ++block;
  }
  return c;
}

Counters simulate_parallel(const SystemConfig& raw, int workers) {
  const SystemConfig cfg = validate_config(raw);
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (workers == 1) return simulate(cfg);
  if (!stateless(cfg)) {
    throw ConfigError(
        "parallel slot partitioning requires zero deadtimes and disabled "
        "afterpulsing; this configuration carries cross-slot state and must "
        "run sequentially");
  }

  const std::int64_t n_blocks = (cfg.n_slots + kBlockSlots - 1) / kBlockSlots;
  const int n_workers =
      static_cast<int>(std::min<std::int64_t>(workers, n_blocks));
  std::vector<std::future<Counters>> futs;
  futs.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&cfg, w, n_workers,
                                                   n_blocks]() {
      Counters part = make_counters(cfg.heralding.m);
      for (std::int64_t b = w; b < n_blocks; b += n_workers) {
        EngineState st = make_state(cfg);  // no carried state by contract
        const std::int64_t first = b * kBlockSlots;
        const std::int64_t count = std::min(kBlockSlots, cfg.n_slots - first);
        run_block(cfg, first, count, static_cast<std::uint64_t>(b), st, part);
      }
      return part;
    }));
  }
  Counters total = make_counters(cfg.heralding.m);
  for (auto& f : futs) total.merge(f.get());
  return total;
}

std::vector<std::pair<Counters, Counters>> simulate_noise_pair(
    const SystemConfig& raw, const std::vector<double>& noise_levels) {
  SystemConfig cfg = validate_config(raw);
  SystemConfig off_cfg = cfg;
  off_cfg.receiver.noise_prob_per_gate = 0.0;
  const Counters off = simulate(off_cfg);

  std::vector<std::pair<Counters, Counters>> out;
  out.reserve(noise_levels.size());
  for (double level : noise_levels) {
    if (level == 0.0) {
      out.emplace_back(off, off);
      continue;
    }
    SystemConfig on_cfg = cfg;
    on_cfg.receiver.noise_prob_per_gate = level;
    out.emplace_back(simulate(on_cfg), off);
  }
  return out;
}

}  // namespace hsim
