#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hsim/types.hpp"

namespace hsim {

// Slot-by-slot stochastic model of the transmitter (source, splitter,
// heralding detectors, XOR veto), the channel and the receiver.
//
// Time is discretized at the source clock: every detector decision is
// resolved once per slot. Randomness is consumed from per-component streams
// derived from cfg.seed (see rng.hpp), drawn in fixed blocks of kBlockSlots
// slots, so a run is a pure function of its validated configuration.
//
// Per slot:
//   1. draw the pair number from the configured distribution with mean mu;
//   2. route each heralding photon to arm i with probability
//      arm_transmittance[i], otherwise it is lost;
//   3. a live heralding detector fires on k >= 1 arrivals with probability
//      1 - (1 - efficiency)^k, else on a dark count, else on an afterpulse
//      with probability A exp(-dt/tau_ap) measured from its last avalanche;
//      a firing starts the non-paralyzable deadtime;
//   4. the XOR stage (present for m >= 2) emits a herald iff exactly one
//      detector fired and the veto circuit is outside its own deadtime;
//      two or more firings tally a coincidence and suppress the herald;
//   5. when the receiver gate is open (every herald slot if triggered,
//      every slot otherwise) each emitted pair's heralded photon survives
//      the channel with probability channel_transmittance, a noise photon
//      arrives with probability noise_prob_per_gate (at most one), the
//      splitter routes hbt_split of them to detector 3, and the receiver
//      detectors apply efficiency, dark counts and deadtime.
//
// Cross-slot state: detector deadtimes and afterpulse clocks, the XOR
// deadtime, and the previous-slot flag used for offset coincidences. The
// offset-coincidence pair that would straddle a block boundary is not
// counted, which keeps block results independent of worker scheduling.
inline constexpr std::int64_t kBlockSlots = std::int64_t{1} << 20;

Counters simulate(const SystemConfig& cfg);

// Splits the slot range over worker threads. Only legal when every deadtime
// is zero and afterpulsing is disabled (no cross-slot state); otherwise
// throws ConfigError. Results are bit-identical to simulate() and
// independent of the worker count.
Counters simulate_parallel(const SystemConfig& cfg, int workers);

// For each noise level, runs the same configuration with the noise source
// on and off. Both runs share every seed, mirroring a switched noise-laser
// measurement; the off run is identical across levels and is computed once.
std::vector<std::pair<Counters, Counters>> simulate_noise_pair(
    const SystemConfig& cfg, const std::vector<double>& noise_levels);

}  // namespace hsim
