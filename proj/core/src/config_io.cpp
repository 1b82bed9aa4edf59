#include "hsim/config_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace hsim {
namespace config_io {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number from '" + v +
                      "'");
  }
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool detector_field(DetectorParams& d, const std::string& field,
                    const std::string& key, const std::string& value) {
  if (field == "efficiency") {
    d.efficiency = parse_double(key, value);
  } else if (field == "deadtime_s") {
    d.deadtime_s = parse_double(key, value);
  } else if (field == "dark_prob") {
    d.dark_prob = parse_double(key, value);
  } else if (field == "afterpulse_amplitude") {
    d.afterpulse_amplitude = parse_double(key, value);
  } else if (field == "afterpulse_tau_s") {
    d.afterpulse_tau_s = parse_double(key, value);
  } else {
    return false;
  }
  return true;
}

void serialize_detector(std::ostream& os, const std::string& prefix,
                        const DetectorParams& d) {
  os << prefix << ".efficiency = " << format_double(d.efficiency) << "\n";
  os << prefix << ".deadtime_s = " << format_double(d.deadtime_s) << "\n";
  os << prefix << ".dark_prob = " << format_double(d.dark_prob) << "\n";
  os << prefix << ".afterpulse_amplitude = "
     << format_double(d.afterpulse_amplitude) << "\n";
  os << prefix << ".afterpulse_tau_s = " << format_double(d.afterpulse_tau_s)
     << "\n";
}

}  // namespace

SystemConfig paper_default_profile() {
  SystemConfig cfg;
  cfg.source.mu = 0.12;
  cfg.source.clock_rate_hz = 48.7e6;
  cfg.source.pair_distribution = PairDistribution::poisson;

  const double beta_total = std::pow(10.0, -1.3);  // -13.0 dB heralding arm
  cfg.heralding.m = 2;
  cfg.heralding.arm_transmittance = {beta_total / 2.0, beta_total / 2.0};
  DetectorParams herald_det;
  herald_det.efficiency = 1.0;  // quantum efficiency folded into transmittance
  herald_det.deadtime_s = 10e-6;
  herald_det.dark_prob = 0.0;
  herald_det.afterpulse_amplitude = 0.0;
  herald_det.afterpulse_tau_s = 0.5e-6;
  cfg.heralding.detectors = {herald_det, herald_det};
  cfg.heralding.xor_deadtime_s = 120e-9;

  cfg.receiver.channel_transmittance = 0.745;
  cfg.receiver.noise_prob_per_gate = 0.0;
  cfg.receiver.hbt_split = 0.5;
  DetectorParams recv_det;
  recv_det.efficiency = 0.6;
  recv_det.deadtime_s = 10e-6;
  recv_det.dark_prob = 0.0;
  recv_det.afterpulse_amplitude = 0.0;
  recv_det.afterpulse_tau_s = 0.5e-6;
  cfg.receiver.detector3 = recv_det;
  cfg.receiver.detector4 = recv_det;
  cfg.receiver.triggered = true;

  cfg.seed = kDefaultSeed;
  cfg.n_slots = 10'000'000;
  return cfg;
}

std::vector<std::string> profile_names() { return {"paper-default"}; }

SystemConfig profile(const std::string& name) {
  if (name == "paper-default") return paper_default_profile();
  std::string known;
  for (const auto& n : profile_names()) known += " " + n;
  throw ConfigError("unknown profile '" + name + "'; known profiles:" + known);
}

void apply_key(SystemConfig& cfg, const std::string& raw_key,
               const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key.empty()) throw ConfigError("empty config key");

  if (key == "source.mu") {
    cfg.source.mu = parse_double(key, value);
  } else if (key == "source.clock_rate_hz") {
    cfg.source.clock_rate_hz = parse_double(key, value);
  } else if (key == "source.pair_distribution") {
    if (value == "poisson") {
      cfg.source.pair_distribution = PairDistribution::poisson;
    } else if (value == "thermal") {
      cfg.source.pair_distribution = PairDistribution::thermal;
    } else {
      throw ConfigError("key '" + key + "': expected poisson or thermal");
    }
  } else if (key == "heralding.m") {
    const int m = static_cast<int>(parse_double(key, value));
    if (m < 1) throw ConfigError("heralding.m must be >= 1");
    cfg.heralding.m = m;
    DetectorParams tmpl = cfg.heralding.detectors.empty()
                              ? DetectorParams{}
                              : cfg.heralding.detectors[0];
    cfg.heralding.detectors.assign(m, tmpl);
    const double t = cfg.heralding.arm_transmittance.empty()
                         ? 0.0
                         : cfg.heralding.arm_transmittance[0];
    cfg.heralding.arm_transmittance.assign(m, t);
  } else if (key == "heralding.arm_transmittance") {
    cfg.heralding.arm_transmittance = parse_double_list(key, value);
  } else if (key == "heralding.xor_deadtime_s") {
    cfg.heralding.xor_deadtime_s = parse_double(key, value);
  } else if (key.rfind("heralding.detector", 0) == 0) {
    std::string rest = key.substr(std::string("heralding.detector").size());
    int index = -1;  // all arms
    if (!rest.empty() && rest[0] == '[') {
      const auto close = rest.find(']');
      if (close == std::string::npos) {
        throw ConfigError("key '" + key + "': missing ']'");
      }
      index = std::stoi(rest.substr(1, close - 1));
      rest = rest.substr(close + 1);
    }
    if (rest.empty() || rest[0] != '.') {
      throw ConfigError("unknown config key '" + key + "'");
    }
    const std::string field = rest.substr(1);
    if (index >= 0) {
      if (index >= static_cast<int>(cfg.heralding.detectors.size())) {
        throw ConfigError("key '" + key + "': detector index out of range");
      }
      if (!detector_field(cfg.heralding.detectors[index], field, key, value)) {
        throw ConfigError("unknown config key '" + key + "'");
      }
    } else {
      for (auto& d : cfg.heralding.detectors) {
        if (!detector_field(d, field, key, value)) {
          throw ConfigError("unknown config key '" + key + "'");
        }
      }
    }
  } else if (key == "receiver.channel_transmittance") {
    cfg.receiver.channel_transmittance = parse_double(key, value);
  } else if (key == "receiver.noise_prob_per_gate") {
    cfg.receiver.noise_prob_per_gate = parse_double(key, value);
  } else if (key == "receiver.hbt_split") {
    cfg.receiver.hbt_split = parse_double(key, value);
  } else if (key == "receiver.triggered") {
    cfg.receiver.triggered = parse_bool(key, value);
  } else if (key.rfind("receiver.detector3.", 0) == 0) {
    const std::string field = key.substr(std::string("receiver.detector3.").size());
    if (!detector_field(cfg.receiver.detector3, field, key, value)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } else if (key.rfind("receiver.detector4.", 0) == 0) {
    const std::string field = key.substr(std::string("receiver.detector4.").size());
    if (!detector_field(cfg.receiver.detector4, field, key, value)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
  } else if (key == "n_slots") {
    cfg.n_slots = static_cast<std::int64_t>(std::stoll(value));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

SystemConfig parse_config_text(const std::string& text) {
  SystemConfig cfg = paper_default_profile();

  std::vector<std::pair<std::string, std::string>> entries;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  // m first so per-detector keys see the right arm count.
  for (const auto& [k, v] : entries) {
    if (k == "heralding.m") apply_key(cfg, k, v);
  }
  for (const auto& [k, v] : entries) {
    if (k != "heralding.m") apply_key(cfg, k, v);
  }
  return cfg;
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const SystemConfig& cfg) {
  std::ostringstream os;
  os << "source.mu = " << format_double(cfg.source.mu) << "\n";
  os << "source.clock_rate_hz = " << format_double(cfg.source.clock_rate_hz)
     << "\n";
  os << "source.pair_distribution = "
     << (cfg.source.pair_distribution == PairDistribution::poisson ? "poisson"
                                                                   : "thermal")
     << "\n";
  os << "heralding.m = " << cfg.heralding.m << "\n";
  os << "heralding.arm_transmittance = ";
  for (std::size_t i = 0; i < cfg.heralding.arm_transmittance.size(); ++i) {
    if (i) os << ", ";
    os << format_double(cfg.heralding.arm_transmittance[i]);
  }
  os << "\n";
  os << "heralding.xor_deadtime_s = "
     << format_double(cfg.heralding.xor_deadtime_s) << "\n";
  for (std::size_t i = 0; i < cfg.heralding.detectors.size(); ++i) {
    serialize_detector(os, "heralding.detector[" + std::to_string(i) + "]",
                       cfg.heralding.detectors[i]);
  }
  os << "receiver.channel_transmittance = "
     << format_double(cfg.receiver.channel_transmittance) << "\n";
  os << "receiver.noise_prob_per_gate = "
     << format_double(cfg.receiver.noise_prob_per_gate) << "\n";
  os << "receiver.hbt_split = " << format_double(cfg.receiver.hbt_split)
     << "\n";
  serialize_detector(os, "receiver.detector3", cfg.receiver.detector3);
  serialize_detector(os, "receiver.detector4", cfg.receiver.detector4);
  os << "receiver.triggered = " << (cfg.receiver.triggered ? "true" : "false")
     << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "n_slots = " << cfg.n_slots << "\n";
  return os.str();
}

std::string config_digest(const SystemConfig& cfg) {
  const std::string canon = serialize_config(validate_config(cfg));
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace config_io
}  // namespace hsim
