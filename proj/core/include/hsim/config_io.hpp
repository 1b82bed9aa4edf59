#pragma once

#include <string>
#include <vector>

#include "hsim/types.hpp"

namespace hsim {
namespace config_io {

// Flat key = value text with dotted section keys, one per line. '#' starts
// a comment. Unspecified keys keep the value from the paper-default
// profile, so a config file only has to name what it changes. Example:
//
//   source.mu = 0.12
//   heralding.m = 2
//   heralding.arm_transmittance = 0.02505936, 0.02505936
//   heralding.detector.deadtime_s = 10e-6      # all arms
//   heralding.detector[1].efficiency = 0.85    # one arm
//   receiver.detector3.efficiency = 0.6
//   seed = 123456789

// mu=0.12, F=48.7 MHz, two-arm -13 dB heralding split, 10 us detector
// deadtimes, 120 ns veto deadtime, 74.5% channel transmittance, HBT
// receiver. The fixed default seed keeps shipped tables reproducible.
SystemConfig paper_default_profile();

inline constexpr std::uint64_t kDefaultSeed = 123456789ULL;

std::vector<std::string> profile_names();
SystemConfig profile(const std::string& name);  // throws ConfigError

// Applies one dotted key. Throws ConfigError for unknown keys or malformed
// values. "heralding.m" resizes the arm vectors, replicating arm 0.
void apply_key(SystemConfig& cfg, const std::string& key,
               const std::string& value);

SystemConfig parse_config_text(const std::string& text);
SystemConfig load_config_file(const std::string& path);

// Canonical serialization: every key, fixed order, round-trip exact floats.
std::string serialize_config(const SystemConfig& cfg);

// FNV-1a 64 over the canonical serialization of the validated config,
// rendered as 16 hex digits.
std::string config_digest(const SystemConfig& cfg);

}  // namespace config_io
}  // namespace hsim
