#include "hsim/run_record.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hsim {

namespace {

using nlohmann::ordered_json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

ordered_json row_to_json(const experiments::SweepRow& row) {
  ordered_json j;
  j["axis_value"] = row.axis_value;
  j["replicate"] = row.replicate;
  j["seed"] = row.seed;
  j["config_digest"] = row.config_digest;
  ordered_json metrics = ordered_json::object();
  for (const auto& [name, e] : row.metrics) {
    metrics[name] = {{"value", e.value},
                     {"std_error", e.std_error},
                     {"n_samples", e.n_samples}};
  }
  j["metrics"] = metrics;
  ordered_json an = ordered_json::object();
  for (const auto& [name, v] : row.analytic) an[name] = v;
  j["analytic"] = an;
  ordered_json errs = ordered_json::object();
  for (const auto& [name, v] : row.errors) errs[name] = v;
  j["errors"] = errs;
  return j;
}

experiments::SweepRow row_from_json(const ordered_json& j) {
  experiments::SweepRow row;
  row.axis_value = j.at("axis_value").get<double>();
  row.replicate = j.at("replicate").get<int>();
  row.seed = j.at("seed").get<std::uint64_t>();
  row.config_digest = j.at("config_digest").get<std::string>();
  for (const auto& [name, e] : j.at("metrics").items()) {
    MetricEstimate m;
    m.value = e.at("value").get<double>();
    m.std_error = e.at("std_error").get<double>();
    m.n_samples = e.at("n_samples").get<std::int64_t>();
    row.metrics[name] = m;
  }
  for (const auto& [name, v] : j.at("analytic").items()) {
    row.analytic[name] = v.get<double>();
  }
  for (const auto& [name, v] : j.at("errors").items()) {
    row.errors[name] = v.get<std::string>();
  }
  return row;
}

}  // namespace

std::string run_record_to_json(const RunRecord& rec) {
  ordered_json j;
  j["tool_version"] = rec.tool_version;
  j["scenario"] = rec.scenario;
  j["config_digest"] = rec.config_digest;
  j["seed"] = rec.seed;
  j["wall_time_s"] = rec.wall_time_s;
  ordered_json assumptions = ordered_json::object();
  for (const auto& [k, v] : rec.assumptions) assumptions[k] = v;
  j["assumptions"] = assumptions;
  ordered_json rows = ordered_json::array();
  for (const auto& row : rec.rows) rows.push_back(row_to_json(row));
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

RunRecord run_record_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  RunRecord rec;
  rec.tool_version = j.at("tool_version").get<std::string>();
  rec.scenario = j.at("scenario").get<std::string>();
  rec.config_digest = j.at("config_digest").get<std::string>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.wall_time_s = j.at("wall_time_s").get<double>();
  for (const auto& [k, v] : j.at("assumptions").items()) {
    rec.assumptions[k] = v.get<std::string>();
  }
  for (const auto& row : j.at("rows")) rec.rows.push_back(row_from_json(row));
  return rec;
}

bool run_records_equal(const RunRecord& a, const RunRecord& b) {
  RunRecord a2 = a;
  RunRecord b2 = b;
  a2.wall_time_s = 0.0;
  b2.wall_time_s = 0.0;
  return run_record_to_json(a2) == run_record_to_json(b2);
}

std::string render_table_csv(const RunRecord& rec, const std::string& axis) {
  std::ostringstream os;
  os << "# " << rec.tool_version << " table\n";
  os << "# scenario: " << rec.scenario << "\n";
  os << "# config_digest: " << rec.config_digest << "\n";
  os << "# seed: " << rec.seed << "\n";
  for (const auto& [k, v] : rec.assumptions) {
    os << "# assumption " << k << ": " << v << "\n";
  }
  os << "# wall_time_s: " << fmt(rec.wall_time_s) << "\n";

  std::set<std::string> metric_names;
  std::set<std::string> analytic_names;
  bool any_errors = false;
  for (const auto& row : rec.rows) {
    for (const auto& [k, v] : row.metrics) metric_names.insert(k);
    for (const auto& [k, v] : row.analytic) analytic_names.insert(k);
    any_errors = any_errors || !row.errors.empty();
  }

  os << "axis:" << axis << ",replicate,seed";
  for (const auto& name : metric_names) os << "," << name << "," << name << "_err";
  for (const auto& name : analytic_names) os << "," << name;
  if (any_errors) os << ",row_errors";
  os << "\n";

  for (const auto& row : rec.rows) {
    os << fmt(row.axis_value) << "," << row.replicate << "," << row.seed;
    for (const auto& name : metric_names) {
      auto it = row.metrics.find(name);
      if (it == row.metrics.end()) {
        os << ",,";
      } else {
        os << "," << fmt(it->second.value) << "," << fmt(it->second.std_error);
      }
    }
    for (const auto& name : analytic_names) {
      auto it = row.analytic.find(name);
      os << ",";
      if (it != row.analytic.end()) os << fmt(it->second);
    }
    if (any_errors) {
      os << ",";
      bool first = true;
      for (const auto& [k, v] : row.errors) {
        if (!first) os << ";";
        first = false;
        std::string msg = v;
        for (auto& ch : msg) {
          if (ch == ',' || ch == '\n') ch = ' ';
        }
        os << k << "=" << msg;
      }
    }
    os << "\n";
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file '" + path + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing file '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hsim
