#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "greendc/errors.hpp"
#include "greendc/sim.hpp"

namespace greendc {

// Key order in summary.json is fixed so identical runs produce identical
// bytes; nlohmann's ordered_json preserves insertion order.
inline nlohmann::ordered_json summary_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["policy"] = r.policy;
  j["predictor"] = r.predictor;
  j["seed"] = r.seed;
  j["horizon"] = r.horizon;
  j["dt_s"] = r.dt_s;
  j["brown_kwh"] = r.brown_kwh;
  j["green_kwh"] = r.green_kwh;
  j["total_kwh"] = r.total_kwh;
  j["renewable_potential_kwh"] = r.renewable_potential_kwh;
  j["mean_rt_ms"] = r.mean_rt_ms;
  j["rt_percentiles"] = {{"p95_ms", r.p95_rt_ms}, {"p99_ms", r.p99_rt_ms}};
  j["deadline_violations"] = r.deadline_violations;
  j["deactivation_pct"] = r.deactivation_pct;
  j["completed_jobs"] = r.completed_jobs;
  j["deferred_jobs"] = r.deferred_jobs;
  j["incomplete_jobs"] = r.incomplete_jobs;
  j["saturated_intervals"] = r.saturated_intervals;
  j["overloaded_intervals"] = r.overloaded_intervals;
  j["migrations"] = r.migrations;
  j["mean_active_hosts"] = r.mean_active_hosts;
  j["batch_units_executed"] = r.batch_units_executed;
  j["batch_units_expected"] = r.batch_units_expected;
  return j;
}

inline void write_intervals_csv(const MetricsReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "t,server_w,cooling_w,total_w,renewable_w,brown_w,green_w,"
         "demand_units,active_hosts,mean_rt_ms,deactivated_pct\n";
  char buf[256];
  for (const auto& x : r.intervals) {
    std::snprintf(buf, sizeof buf,
                  "%d,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.4f,%d,%.3f,%.4f\n", x.t,
                  x.server_w, x.cooling_w, x.total_w, x.renewable_w, x.brown_w,
                  x.green_w, x.demand_units, x.active_hosts, x.mean_rt_ms,
                  x.deactivated_pct);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path);
}

inline void write_report(const MetricsReport& r, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  write_intervals_csv(r, out_dir + "/intervals.csv");
  std::ofstream js(out_dir + "/summary.json", std::ios::binary);
  if (!js) throw IoError("cannot write " + out_dir + "/summary.json");
  js << summary_json(r).dump(2) << "\n";
  if (!js) throw IoError("failed writing " + out_dir + "/summary.json");
}

inline nlohmann::ordered_json load_summary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  return j;
}

struct CompareRow {
  std::string metric;
  double a = 0.0, b = 0.0;
};

// Side-by-side deltas of two summaries. Refuses to compare runs of
// different shape: both files must agree on horizon and interval length and
// carry every compared metric.
inline std::vector<CompareRow> compare_summaries(const nlohmann::ordered_json& a,
                                                 const nlohmann::ordered_json& b) {
  for (const char* key : {"horizon", "dt_s"}) {
    if (!a.contains(key) || !b.contains(key))
      throw SchemaMismatchError(std::string("summary lacks ") + key);
    if (a[key] != b[key])
      throw SchemaMismatchError(std::string("summaries differ in ") + key + ": " +
                                a[key].dump() + " vs " + b[key].dump());
  }
  std::vector<CompareRow> rows;
  auto num = [](const nlohmann::ordered_json& j, const std::string& key) -> double {
    const nlohmann::ordered_json* p = &j;
    std::size_t dot = key.find('.');
    std::string head = key, tail;
    if (dot != std::string::npos) {
      head = key.substr(0, dot);
      tail = key.substr(dot + 1);
    }
    if (!p->contains(head)) throw SchemaMismatchError("summary lacks " + key);
    p = &(*p)[head];
    if (!tail.empty()) {
      if (!p->contains(tail)) throw SchemaMismatchError("summary lacks " + key);
      p = &(*p)[tail];
    }
    if (!p->is_number()) throw SchemaMismatchError(key + " is not numeric");
    return p->get<double>();
  };
  for (const char* key :
       {"brown_kwh", "green_kwh", "total_kwh", "renewable_potential_kwh", "mean_rt_ms",
        "rt_percentiles.p95_ms", "rt_percentiles.p99_ms", "deadline_violations",
        "deactivation_pct", "completed_jobs", "deferred_jobs", "migrations",
        "mean_active_hosts"}) {
    rows.push_back({key, num(a, key), num(b, key)});
  }
  return rows;
}

inline std::string format_compare(const std::vector<CompareRow>& rows, const std::string& la,
                                  const std::string& lb) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %14s %14s %14s %9s\n", "metric", la.c_str(),
                lb.c_str(), "delta", "delta%");
  out += buf;
  for (const auto& r : rows) {
    double delta = r.b - r.a;
    if (r.a != 0.0) {
      std::snprintf(buf, sizeof buf, "%-28s %14.4f %14.4f %+14.4f %+8.2f%%\n",
                    r.metric.c_str(), r.a, r.b, delta, 100.0 * delta / r.a);
    } else {
      std::snprintf(buf, sizeof buf, "%-28s %14.4f %14.4f %+14.4f %9s\n", r.metric.c_str(),
                    r.a, r.b, delta, "n/a");
    }
    out += buf;
  }
  return out;
}

}  // namespace greendc
