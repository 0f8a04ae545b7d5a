#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "greendc/cluster.hpp"
#include "greendc/errors.hpp"

namespace greendc {

struct PowerModelConfig {
  double t_sup_c = 25.0;       // cold-aisle supply temperature
  double standby_watts = 0.0;  // draw of a LowPower host
};

// Coefficient of performance of the HVAC water chiller as a function of the
// supply temperature. Quadratic fit; strictly increasing for t > 0.
inline double cop(double t_sup_c) {
  if (t_sup_c <= 0.0) throw ConfigError("supply temperature must be positive");
  return 0.0068 * t_sup_c * t_sup_c + 0.0008 * t_sup_c + 0.458;
}

inline double cooling_power(double server_watts, double t_sup_c) {
  if (server_watts < 0.0) throw ConfigError("server power must be non-negative");
  return server_watts / cop(t_sup_c);
}

// Host draw: idle plus utilization-proportional dynamic range, dimmed by the
// brownout retention factor. An empty or low-power host draws nothing here;
// standby draw of low-power hosts is added at the cluster level. Normalized
// utilization is clipped at 1 since a host cannot draw past its full rating.
inline double host_power(const HostState& host, double retention) {
  if (retention < 0.0 || retention > 1.0)
    throw ConfigError("retention must be within [0, 1]");
  if (host.power_mode == PowerMode::LowPower || host.empty()) return 0.0;
  double norm = std::min(host.load_units() / host.spec.cpu_capacity, 1.0);
  return host.spec.idle_watts +
         retention * norm * (host.spec.full_watts - host.spec.idle_watts);
}

struct ClusterPower {
  double server_watts = 0.0;
  double cooling_watts = 0.0;
  double total_watts = 0.0;
};

// retentions is per-host in cluster order, or empty for all-1.
inline ClusterPower total_power(const ClusterState& cluster,
                                std::span<const double> retentions,
                                const PowerModelConfig& cfg = {}) {
  if (!retentions.empty() && retentions.size() != cluster.host_count())
    throw ConfigError("retention vector size must match host count");
  ClusterPower p;
  for (std::size_t i = 0; i < cluster.host_count(); ++i) {
    const HostState& h = cluster.hosts()[i];
    double r = retentions.empty() ? 1.0 : retentions[i];
    p.server_watts += host_power(h, r);
    if (h.power_mode == PowerMode::LowPower) p.server_watts += cfg.standby_watts;
  }
  p.cooling_watts = cooling_power(p.server_watts, cfg.t_sup_c);
  p.total_watts = p.server_watts + p.cooling_watts;
  return p;
}

inline ClusterPower total_power(const ClusterState& cluster,
                                const PowerModelConfig& cfg = {}) {
  return total_power(cluster, std::span<const double>{}, cfg);
}

// One interval's power/energy bookkeeping. Green draw is capped by what the
// panel produced; the remainder is grid (brown) by definition, so
// green + brown == total holds exactly.
struct PowerSample {
  int t = 0;
  double server_watts = 0.0;
  double cooling_watts = 0.0;
  double total_watts = 0.0;
  double renewable_watts = 0.0;  // produced, not necessarily consumed
  double green_watts = 0.0;      // consumed from the panel
  double brown_watts = 0.0;      // consumed from the grid

  static PowerSample make(int t, double server_watts, double cooling_watts,
                          double renewable_watts) {
    PowerSample s;
    s.t = t;
    s.server_watts = server_watts;
    s.cooling_watts = cooling_watts;
    s.total_watts = server_watts + cooling_watts;
    s.renewable_watts = renewable_watts;
    s.green_watts = std::min(s.total_watts, renewable_watts);
    s.brown_watts = s.total_watts - s.green_watts;
    return s;
  }
};

struct EnergyTotals {
  double brown_kwh = 0.0;
  double green_kwh = 0.0;
  double total_kwh = 0.0;
};

inline EnergyTotals energy_accounting(std::span<const PowerSample> samples, double dt_s) {
  if (samples.empty()) throw EmptySeriesError("no power samples to integrate");
  if (dt_s <= 0.0) throw ConfigError("interval length must be positive");
  const double to_kwh = dt_s / 3600.0 / 1000.0;
  EnergyTotals e;
  for (const auto& s : samples) {
    e.brown_kwh += s.brown_watts * to_kwh;
    e.green_kwh += s.green_watts * to_kwh;
  }
  e.total_kwh = e.brown_kwh + e.green_kwh;
  return e;
}

}  // namespace greendc
