#pragma once

#include <cstdint>

namespace hsim {

// Stream-splitting contract
// -------------------------
// Every stochastic component of a run owns an independent generator stream.
// A stream is addressed by (run seed, component id, block index) and its
// state is derived as
//
//   s0 = mix(seed ^ mix(component*GOLDEN) ^ mix(block*LEAF))
//
// where mix() is the SplitMix64 finalizer and the four xoshiro256++ state
// words are the next four SplitMix64 outputs from s0.  Because the address
// is purely positional, enabling or disabling one component (for example
// turning injected noise on) never shifts the draws consumed by another,
// and a slot block always sees the same randomness no matter which worker
// executes it.

inline constexpr std::uint64_t kStreamGolden = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kStreamLeaf = 0xBF58476D1CE4E5B9ULL;

// Component ids, fixed for the lifetime of the file formats.
enum class StreamId : std::uint64_t {
  source = 0,        // pair-number draws
  splitter = 1,      // heralding-arm routing
  channel = 2,       // heralded-photon survival + receiver routing
  noise = 3,         // injected noise photons
  receiver3 = 4,     // receiver detector 3
  receiver4 = 5,     // receiver detector 4
  herald_det0 = 8,   // heralding detector i uses herald_det0 + i
};

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t s) : state(s) {}

  std::uint64_t next() {
    std::uint64_t z = (state += kStreamGolden);
    z = (z ^ (z >> 30)) * kStreamLeaf;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

inline std::uint64_t mix64(std::uint64_t x) {
  SplitMix64 s(x);
  return s.next();
}

// xoshiro256++ (Blackman & Vigna), small and fast enough to sit in the
// per-slot hot loop.
class Xoshiro256pp {
 public:
  Xoshiro256pp() : Xoshiro256pp(0) {}

  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

inline std::uint64_t stream_seed(std::uint64_t run_seed, StreamId id,
                                 std::uint64_t block) {
  const std::uint64_t c = static_cast<std::uint64_t>(id);
  return mix64(run_seed ^ mix64(c * kStreamGolden) ^ mix64(block * kStreamLeaf));
}

inline Xoshiro256pp make_stream(std::uint64_t run_seed, StreamId id,
                                std::uint64_t block) {
  return Xoshiro256pp(stream_seed(run_seed, id, block));
}

inline StreamId herald_stream(int arm) {
  return static_cast<StreamId>(
      static_cast<std::uint64_t>(StreamId::herald_det0) +
      static_cast<std::uint64_t>(arm));
}

}  // namespace hsim
