#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "greendc/csv.hpp"
#include "greendc/errors.hpp"

namespace greendc {

// Interactive sizing treats each CPU utilization unit as a processor-sharing
// server of rate service_rate. Required units for arrival rate l at response
// target rt solve 1/(mu - l/a) = rt for a.
inline double interactive_demand(double arrival_rate, double service_rate,
                                 double target_rt_s) {
  if (arrival_rate < 0.0) throw ConfigError("arrival rate must be non-negative");
  if (service_rate <= 0.0) throw ConfigError("service rate must be positive");
  if (target_rt_s <= 0.0) throw ConfigError("response-time target must be positive");
  double slack = service_rate - 1.0 / target_rt_s;
  if (slack <= 0.0)
    throw InfeasibleTargetError("target response time " + std::to_string(target_rt_s) +
                                "s is unreachable at service rate " +
                                std::to_string(service_rate));
  return arrival_rate / slack;
}

// Achieved response time at a given allocation; nullopt when the allocation
// cannot keep up (saturated queue).
inline std::optional<double> response_time(double arrival_rate, double service_rate,
                                           double allocated_units) {
  if (arrival_rate < 0.0) throw ConfigError("arrival rate must be non-negative");
  if (service_rate <= 0.0) throw ConfigError("service rate must be positive");
  if (allocated_units <= 0.0)
    throw ZeroAllocationError("allocation must be positive for response-time evaluation");
  double effective = service_rate - arrival_rate / allocated_units;
  if (effective <= 0.0) return std::nullopt;
  return 1.0 / effective;
}

struct InteractiveWorkload {
  std::string id;
  std::vector<double> arrival_rate;  // requests/s per interval
  double service_rate = 60.0;        // requests/s per utilization unit
  double target_rt_s = 0.5;

  void validate() const {
    if (id.empty()) throw ConfigError("workload id must not be empty");
    if (service_rate <= 1.0 / target_rt_s)
      throw InfeasibleTargetError(id + ": service rate must exceed 1/target_rt");
    for (double r : arrival_rate)
      if (r < 0.0) throw ConfigError(id + ": negative arrival rate");
  }

  double arrival(int t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= arrival_rate.size())
      throw ConfigError(id + ": no arrival rate for interval " + std::to_string(t));
    return arrival_rate[static_cast<std::size_t>(t)];
  }

  double demand(int t) const {
    return interactive_demand(arrival(t), service_rate, target_rt_s);
  }
};

// Batch job in interval units. scheduled_start moves under deferral; the
// per-interval amount b = total_units / exec stays fixed (whole-job moves).
struct BatchJob {
  std::string id;
  int start = 0;       // requested start interval
  int exec = 1;        // execution length, intervals
  int deadline = 0;    // completion must satisfy scheduled_start + exec <= deadline
  double unit_util = 0.0;  // utilization units while running

  int scheduled_start = 0;

  double total_units() const { return static_cast<double>(exec) * unit_util; }
  bool running_at(int t) const {
    return t >= scheduled_start && t < scheduled_start + exec;
  }
  int completion() const { return scheduled_start + exec; }
  int latest_start() const { return deadline - exec; }
};

// Deferred-amount recurrence: carried backlog plus fresh arrivals minus the
// part deferred again this interval.
inline double batch_amount_update(double b_prev, double gamma_prev, double b_orig,
                                  double gamma_now) {
  if (gamma_prev < 0.0 || gamma_prev > 1.0 || gamma_now < 0.0 || gamma_now > 1.0)
    throw ConfigError("deferred fraction must be within [0, 1]");
  return gamma_prev * b_prev + b_orig - gamma_now * b_orig;
}

struct DemandProfile {
  int t = 0;
  double interactive_units = 0.0;
  double batch_units = 0.0;
  double total_units = 0.0;
};

inline DemandProfile total_demand(std::span<const InteractiveWorkload> interactives,
                                  std::span<const BatchJob> jobs, int t) {
  DemandProfile d;
  d.t = t;
  for (const auto& w : interactives) d.interactive_units += w.demand(t);
  for (const auto& j : jobs)
    if (j.running_at(t)) d.batch_units += j.unit_util;
  d.total_units = d.interactive_units + d.batch_units;
  return d;
}

// Trace loaders. Interactive rows must cover intervals 0..n-1 in order.
inline std::vector<double> load_interactive_trace(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, {"interval", "requests_per_sec"}, path);
  std::vector<double> rates;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::size_t row = t.row_numbers[i];
    long idx = parse_long(t.rows[i][0], "interval", row);
    if (idx != static_cast<long>(i))
      throw ParseError(path + ": expected interval " + std::to_string(i) + ", got " +
                           std::to_string(idx),
                       row);
    double r = parse_double(t.rows[i][1], "requests_per_sec", row);
    if (r < 0.0) throw ParseError(path + ": negative request rate", row);
    rates.push_back(r);
  }
  if (rates.empty()) throw ParseError(path + ": no data rows", 1);
  return rates;
}

struct RejectedRow {
  std::size_t row = 0;
  std::string job_id;
  std::string reason;
};

struct BatchTrace {
  std::vector<BatchJob> jobs;
  std::vector<RejectedRow> rejected;
};

// Seconds-based batch table mapped onto the interval grid. Rows whose
// deadline cannot be met even without deferral are rejected, not dropped
// silently.
inline BatchTrace load_batch_trace(const std::string& path, double dt_s) {
  if (dt_s <= 0.0) throw ConfigError("interval length must be positive");
  CsvTable t = read_csv(path);
  require_header(t, {"job_id", "start_s", "exec_s", "deadline_s", "util_units"}, path);
  BatchTrace out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    std::size_t row = t.row_numbers[i];
    BatchJob j;
    j.id = r[0];
    double start_s = parse_double(r[1], "start_s", row);
    double exec_s = parse_double(r[2], "exec_s", row);
    double deadline_s = parse_double(r[3], "deadline_s", row);
    j.unit_util = parse_double(r[4], "util_units", row);
    auto reject = [&](const std::string& why) {
      out.rejected.push_back({row, j.id, why});
    };
    if (j.id.empty()) {
      reject("empty job id");
      continue;
    }
    if (start_s < 0.0 || exec_s <= 0.0 || j.unit_util <= 0.0) {
      reject("start_s must be >= 0, exec_s and util_units positive");
      continue;
    }
    j.start = static_cast<int>(std::floor(start_s / dt_s));
    j.exec = std::max(1, static_cast<int>(std::ceil(exec_s / dt_s)));
    j.deadline = static_cast<int>(std::floor(deadline_s / dt_s));
    j.scheduled_start = j.start;
    if (j.start + j.exec > j.deadline) {
      reject("deadline precedes start + exec on the interval grid");
      continue;
    }
    out.jobs.push_back(j);
  }
  return out;
}

}  // namespace greendc
