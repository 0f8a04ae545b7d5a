#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "greendc/errors.hpp"
#include "greendc/forecast.hpp"

namespace greendc {

// Synthetic trace generation shaped like the reference experiment: a
// two-peak diurnal request curve whose peak drives the fleet to a chosen
// utilization, night-heavy batch arrivals with roughly normal deadlines,
// and a clear-sky solar curve per season. Deterministic per seed.
struct TraceGenConfig {
  double dt_s = 300.0;
  int horizon = 288;
  unsigned long seed = 42;
  std::string season = "autumn";  // autumn | summer
  int solar_days = 9;             // history days + the simulated day
  double peak_interactive_util = 0.43;
  double batch_util = 0.27;  // cap on concurrent batch load, fraction of capacity
  double deadline_mean_h = 6.0;
  double deadline_std_h = 1.0;
  int jobs = 40;
  double cluster_capacity = 12.0;  // utilization units the target fleet offers
  double service_rate = 60.0;
  double target_rt_s = 0.5;

  void validate() const {
    if (dt_s <= 0.0 || horizon < 1) throw ConfigError("bad interval grid");
    if (season != "autumn" && season != "summer")
      throw ConfigError("season must be autumn or summer, got '" + season + "'");
    if (solar_days < 3) throw ConfigError("solar_days must be at least 3");
    if (peak_interactive_util <= 0.0 || peak_interactive_util > 1.0 || batch_util < 0.0 ||
        batch_util > 1.0)
      throw ConfigError("utilization fractions must lie in (0, 1]");
    if (deadline_mean_h <= 0.0 || deadline_std_h < 0.0)
      throw ConfigError("bad deadline distribution");
    if (jobs < 0) throw ConfigError("job count must be non-negative");
    if (cluster_capacity <= 0.0) throw ConfigError("cluster capacity must be positive");
    if (service_rate <= 1.0 / target_rt_s)
      throw ConfigError("service_rate must exceed 1/target_rt_s");
  }
};

inline std::vector<double> gen_interactive(const TraceGenConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed ^ 0x1f2e3d4c5b6a7988ULL);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  double peak_rate =
      cfg.peak_interactive_util * cfg.cluster_capacity * (cfg.service_rate - 1.0 / cfg.target_rt_s);
  auto bump = [](double h, double center, double width) {
    double z = (h - center) / width;
    return std::exp(-0.5 * z * z);
  };
  std::vector<double> shape(static_cast<std::size_t>(cfg.horizon));
  double peak_shape = 0.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    double h = (static_cast<double>(t) + 0.5) * cfg.dt_s / 3600.0;
    shape[static_cast<std::size_t>(t)] = bump(h, 10.5, 2.4) + 0.88 * bump(h, 18.5, 2.1);
    peak_shape = std::max(peak_shape, shape[static_cast<std::size_t>(t)]);
  }
  std::vector<double> rates(shape.size());
  const double valley = 0.25;
  for (std::size_t t = 0; t < shape.size(); ++t) {
    double level = valley + (1.0 - valley) * shape[t] / peak_shape;
    rates[t] = std::max(0.0, peak_rate * level * (1.0 + jitter(rng)));
  }
  return rates;
}

struct GeneratedJob {
  std::string id;
  double start_s = 0.0, exec_s = 0.0, deadline_s = 0.0, util_units = 0.0;
};

inline std::vector<GeneratedJob> gen_batch(const TraceGenConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> deadline_gap(cfg.deadline_mean_h * 3600.0,
                                                cfg.deadline_std_h * 3600.0);
  const double day_s = cfg.dt_s * cfg.horizon;
  std::vector<GeneratedJob> jobs;
  for (int k = 0; k < cfg.jobs; ++k) {
    GeneratedJob j;
    char buf[16];
    std::snprintf(buf, sizeof buf, "job-%03d", k);
    j.id = buf;
    // Night-heavy arrivals: overnight ETL keeps most starts before dawn.
    double pick = uni(rng);
    if (pick < 0.55)
      j.start_s = 2.0 * 3600.0 + uni(rng) * 4.0 * 3600.0;
    else if (pick < 0.70)
      j.start_s = uni(rng) * 2.0 * 3600.0;
    else
      j.start_s = 9.0 * 3600.0 + uni(rng) * 12.0 * 3600.0;
    j.exec_s = std::exp(std::log(900.0) + uni(rng) * (std::log(7200.0) - std::log(900.0)));
    j.util_units = 0.25 + uni(rng) * 0.35;
    double slack = std::max(j.exec_s * 1.15, deadline_gap(rng));
    double min_deadline = j.start_s + j.exec_s + 2.0 * cfg.dt_s + 1.0;
    j.deadline_s = std::min(std::max(j.start_s + slack, min_deadline), day_s);
    if (j.deadline_s < min_deadline) {
      // Too close to the end of the day: pull the start back instead.
      j.start_s = std::max(0.0, day_s - (j.exec_s + 2.0 * cfg.dt_s + 1.0) * 1.25);
      j.deadline_s = day_s;
    }
    jobs.push_back(j);
  }
  // Rescale so concurrent batch load never exceeds the configured share of
  // cluster capacity (as requested, before any deferral).
  std::vector<double> concurrent(static_cast<std::size_t>(cfg.horizon), 0.0);
  for (const auto& j : jobs) {
    int s = static_cast<int>(std::floor(j.start_s / cfg.dt_s));
    int e = s + std::max(1, static_cast<int>(std::ceil(j.exec_s / cfg.dt_s)));
    for (int t = s; t < e && t < cfg.horizon; ++t)
      if (t >= 0) concurrent[static_cast<std::size_t>(t)] += j.util_units;
  }
  double peak = *std::max_element(concurrent.begin(), concurrent.end());
  double cap = cfg.batch_util * cfg.cluster_capacity;
  if (peak > cap && peak > 0.0)
    for (auto& j : jobs) j.util_units *= cap / peak;
  std::stable_sort(jobs.begin(), jobs.end(), [](const auto& a, const auto& b) {
    if (a.start_s != b.start_s) return a.start_s < b.start_s;
    return a.id < b.id;
  });
  return jobs;
}

inline std::vector<SolarRecord> gen_solar(const TraceGenConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);
  std::uniform_real_distribution<double> day_factor(0.78, 1.04);
  std::uniform_real_distribution<double> hour_noise(0.93, 1.07);
  const bool summer = cfg.season == "summer";
  const double rise = summer ? 5.0 : 6.3;
  const double set = summer ? 19.6 : 17.4;
  const double gmax = summer ? 960.0 : 840.0;
  std::vector<SolarRecord> records;
  for (int d = 0; d < cfg.solar_days; ++d) {
    double f = day_factor(rng);
    for (int h = 0; h < 24; ++h) {
      double mid = static_cast<double>(h) + 0.5;
      double ghi = 0.0;
      if (mid > rise && mid < set) {
        double frac = (mid - rise) / (set - rise);
        ghi = gmax * f * std::pow(std::sin(frac * 3.14159265358979323846), 1.3) *
              hour_noise(rng);
      }
      SolarRecord rec;
      int day_of_month = d + 1;
      int month = 9;  // fixtures start on September 1st
      while ((month == 9 && day_of_month > 30) || (month != 9 && day_of_month > 31)) {
        day_of_month -= month == 9 ? 30 : 31;
        ++month;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "2018-%02d-%02dT%02d:00:00", month, day_of_month, h);
      rec.timestamp = buf;
      rec.hour_of_day = h;
      rec.ghi = ghi;
      records.push_back(rec);
    }
  }
  return records;
}

inline void write_interactive_csv(const std::string& path, const std::vector<double>& rates) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "interval,requests_per_sec\n";
  char buf[64];
  for (std::size_t t = 0; t < rates.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.4f\n", t, rates[t]);
    out << buf;
  }
}

inline void write_batch_csv(const std::string& path, const std::vector<GeneratedJob>& jobs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "job_id,start_s,exec_s,deadline_s,util_units\n";
  char buf[160];
  for (const auto& j : jobs) {
    std::snprintf(buf, sizeof buf, "%s,%.0f,%.0f,%.0f,%.4f\n", j.id.c_str(), j.start_s,
                  j.exec_s, j.deadline_s, j.util_units);
    out << buf;
  }
}

inline void write_solar_csv(const std::string& path, const std::vector<SolarRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "timestamp_iso8601,ghi_w_m2\n";
  char buf[96];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%.2f\n", r.timestamp.c_str(), r.ghi);
    out << buf;
  }
}

}  // namespace greendc
