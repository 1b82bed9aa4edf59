#pragma once

#include <map>
#include <string>
#include <vector>

#include "hsim/experiments.hpp"
#include "hsim/types.hpp"

namespace hsim {

// Provenance wrapper for everything a command writes: the config digest and
// seed tie any table back to its exact inputs. Serializes to JSON
// losslessly; wall_time_s is the only field excluded from determinism
// comparisons.
struct RunRecord {
  std::string tool_version;
  std::string scenario;
  std::string config_digest;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::map<std::string, std::string> assumptions;  // e.g. afterpulse model
  std::vector<experiments::SweepRow> rows;
};

std::string run_record_to_json(const RunRecord& rec);
RunRecord run_record_from_json(const std::string& text);

// Round-trip comparison that ignores timing metadata.
bool run_records_equal(const RunRecord& a, const RunRecord& b);

// Comma-separated table: '#'-prefixed metadata preamble (digest, seed,
// version, assumptions, wall time), then a header row naming every column
// with units, then one line per SweepRow. Column set is the union over
// rows; metric columns carry a paired _err column.
std::string render_table_csv(const RunRecord& rec, const std::string& axis);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace hsim
