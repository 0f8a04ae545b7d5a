#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "greendc/cluster.hpp"
#include "greendc/forecast.hpp"
#include "greendc/power.hpp"
#include "greendc/workload.hpp"

namespace greendc {

struct PolicyParams {
  double tu_up = 0.8;
  double tu_low = 0.2;
  double epsilon_batch = 0.27;  // utilization share reserved for batch work
  double num_thr = 40.0;        // requests/s one host is expected to absorb
  int scaling_cadence = 12;     // intervals between consolidation/scaling passes

  void validate() const {
    if (!(0.0 < tu_low && tu_low < tu_up && tu_up < 1.0))
      throw ConfigError("need 0 < tu_low < tu_up < 1");
    if (epsilon_batch < 0.0 || epsilon_batch >= 1.0)
      throw ConfigError("epsilon_batch must lie in [0, 1)");
    if (num_thr <= 0.0) throw ConfigError("num_thr must be positive");
    if (scaling_cadence < 1) throw ConfigError("scaling cadence must be >= 1");
  }
};

struct Deactivation {
  std::string vm_id, ms_id;
};
struct Migration {
  std::string vm_id, target_host_id;
};
struct PowerChange {
  std::string host_id;
  PowerMode mode = PowerMode::Active;
};
struct Deferral {
  std::string job_id;
  int to_interval = 0;
};

struct PolicyDecision {
  std::vector<Deactivation> deactivations;
  std::vector<Deactivation> reactivations;
  std::vector<Deferral> deferrals;
  std::vector<Migration> migrations;
  std::vector<PowerChange> power_changes;
  double dimmer = 1.0;
  bool fleet_exhausted = false;

  bool empty() const {
    return deactivations.empty() && reactivations.empty() && deferrals.empty() &&
           migrations.empty() && power_changes.empty();
  }

  void merge(PolicyDecision&& o) {
    auto move_into = [](auto& dst, auto& src) {
      dst.insert(dst.end(), std::make_move_iterator(src.begin()),
                 std::make_move_iterator(src.end()));
    };
    move_into(deactivations, o.deactivations);
    move_into(reactivations, o.reactivations);
    move_into(deferrals, o.deferrals);
    move_into(migrations, o.migrations);
    move_into(power_changes, o.power_changes);
    dimmer = std::min(dimmer, o.dimmer);
    fleet_exhausted = fleet_exhausted || o.fleet_exhausted;
  }
};

// Engine-side application; deferrals touch job state the cluster does not
// hold, so they are the caller's business. Order matters: microservice flags
// first so utilization reads are current, migrations before power changes so
// emptied hosts can actually switch off.
inline void apply_decision(ClusterState& cluster, const PolicyDecision& d) {
  for (const auto& x : d.deactivations) cluster.set_microservice_active(x.vm_id, x.ms_id, false);
  for (const auto& x : d.reactivations) cluster.set_microservice_active(x.vm_id, x.ms_id, true);
  for (const auto& m : d.migrations) cluster.apply_migration(m.vm_id, m.target_host_id);
  for (const auto& p : d.power_changes) cluster.set_power_mode(p.host_id, p.mode);
  cluster.check_invariants();
}

struct PowerEstimate {
  int t = 0;
  double predicted_total_watts = 0.0;
  double predicted_renewable_watts = 0.0;
};

// Planned-power estimator backing deferral decisions. Holds the demand the
// schedule already commits per interval; converts demand to watts through
// the fleet the scaler would provision for it. Future fleet changes are
// unknowable at decision time, so this is an estimate by construction, not
// an oracle.
class PowerPlanner {
public:
  PowerPlanner(const ClusterState& cluster, const PowerModelConfig& cfg, double tu_up,
               std::vector<double> planned_demand_units, const RenewableForecast* renewable)
      : demand_(std::move(planned_demand_units)), cfg_(cfg), tu_up_(tu_up),
        renewable_(renewable) {
    for (const auto& h : cluster.hosts()) specs_.push_back(h.spec);
    std::stable_sort(specs_.begin(), specs_.end(), [](const HostSpec& a, const HostSpec& b) {
      return a.idle_watts < b.idle_watts;
    });
  }

  double demand_at(int t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= demand_.size())
      throw ConfigError("power plan does not cover interval " + std::to_string(t));
    return demand_[static_cast<std::size_t>(t)];
  }

  void add_demand(int first, int len, double units) {
    for (int t = first; t < first + len; ++t)
      if (t >= 0 && static_cast<std::size_t>(t) < demand_.size())
        demand_[static_cast<std::size_t>(t)] += units;
  }

  // Maps planned demand to watts through the fleet the scaler would
  // provision for it: cheapest idle hosts first until capacity at the upper
  // threshold covers the demand. Committed demand therefore raises the
  // estimate monotonically instead of pinning at the current fleet's ceiling.
  PowerEstimate estimate(int t) const {
    PowerEstimate e;
    e.t = t;
    double d = demand_at(t);
    if (d > 1e-12 && !specs_.empty()) {
      double cap = 0.0, idle = 0.0, span = 0.0;
      for (const auto& s : specs_) {
        cap += s.cpu_capacity;
        idle += s.idle_watts;
        span += s.full_watts - s.idle_watts;
        if (cap * tu_up_ >= d) break;
      }
      double server = idle + std::min(d / cap, 1.0) * span;
      e.predicted_total_watts = server + cooling_power(server, cfg_.t_sup_c);
    }
    if (renewable_ && t >= 0 && static_cast<std::size_t>(t) < renewable_->watts.size())
      e.predicted_renewable_watts = renewable_->watts[static_cast<std::size_t>(t)];
    return e;
  }

  bool surplus(int t) const {
    PowerEstimate e = estimate(t);
    return e.predicted_renewable_watts > e.predicted_total_watts;
  }

  int horizon() const { return static_cast<int>(demand_.size()); }

private:
  std::vector<double> demand_;
  std::vector<HostSpec> specs_;
  PowerModelConfig cfg_;
  double tu_up_ = 0.8;
  const RenewableForecast* renewable_ = nullptr;
};

namespace detail {

struct ShedCandidate {
  double utilization = 0.0;
  std::string vm_id, ms_id;
};

// Best contiguous run of the ascending candidate list, by |target - sum|,
// ties to fewer services then to the earliest start. The empty run is a
// legal answer: a small target is best served by shedding nothing.
struct RunChoice {
  std::size_t begin = 0, end = 0;  // [begin, end)
  double error = 0.0;
};

inline RunChoice best_contiguous_run(const std::vector<ShedCandidate>& sorted, double target) {
  RunChoice best{0, 0, std::abs(target)};
  for (std::size_t b = 0; b < sorted.size(); ++b) {
    double sum = 0.0;
    for (std::size_t e = b + 1; e <= sorted.size(); ++e) {
      sum += sorted[e - 1].utilization;
      double err = std::abs(target - sum);
      std::size_t len = e - b, blen = best.end - best.begin;
      if (err < best.error - 1e-12 ||
          (err < best.error + 1e-12 && (len < blen || (len == blen && b < best.begin))))
        best = RunChoice{b, e, err};
    }
  }
  return best;
}

inline std::vector<ShedCandidate> optional_active_on(const HostState& host) {
  std::vector<ShedCandidate> cands;
  for (const auto& vm : host.vms)
    for (const auto& ms : vm.microservices)
      if (ms.active && ms.optionality == Optionality::Optional)
        cands.push_back({ms.utilization, vm.id, ms.id});
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    if (a.utilization != b.utilization) return a.utilization < b.utilization;
    if (a.vm_id != b.vm_id) return a.vm_id < b.vm_id;
    return a.ms_id < b.ms_id;
  });
  return cands;
}

inline void reactivate_all_optional(const ClusterState& cluster, PolicyDecision& d) {
  for (const auto& h : cluster.hosts())
    for (const auto& vm : h.vms)
      for (const auto& ms : vm.microservices)
        if (!ms.active && ms.optionality == Optionality::Optional)
          d.reactivations.push_back({vm.id, ms.id});
}

inline std::vector<std::size_t> overloaded_hosts(const ClusterState& cluster, double tu_up) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cluster.host_count(); ++i) {
    const auto& h = cluster.hosts()[i];
    if (h.power_mode == PowerMode::Active && h.utilization() > tu_up + 1e-12) out.push_back(i);
  }
  return out;
}

inline void shed_on_host(const HostState& host, double target_units, PolicyDecision& d) {
  auto cands = optional_active_on(host);
  if (cands.empty()) return;
  RunChoice run = best_contiguous_run(cands, target_units);
  for (std::size_t k = run.begin; k < run.end; ++k)
    d.deactivations.push_back({cands[k].vm_id, cands[k].ms_id});
}

}  // namespace detail

// Dimmer controller. Outside the renewable window the dimmer expresses the
// utilization reduction sqrt(n_o/n), shed on overloaded hosts only. Inside
// the window with supply short of demand it expresses the retention
// (1/(1-eps)) * sqrt(R/P), clamped into [0,1], and every active host sheds
// the complement of its load; that is what pulls total draw toward the
// supply. Supply covering demand, or no overload outside the window,
// releases the brownout and reactivates every optional microservice.
inline PolicyDecision brownout_interactive(const ClusterState& cluster,
                                           const RenewableForecast& renewable,
                                           const PolicyParams& params,
                                           const PowerModelConfig& power_cfg, int t) {
  PolicyDecision d;
  if (renewable.in_window(t)) {
    double r = renewable.at(t);
    double p = total_power(cluster, power_cfg).total_watts;
    if (r >= p) {
      detail::reactivate_all_optional(cluster, d);
      return d;
    }
    double theta = std::sqrt(r / p) / (1.0 - params.epsilon_batch);
    theta = std::clamp(theta, 0.0, 1.0);
    d.dimmer = theta;
    for (const auto& h : cluster.hosts()) {
      if (h.power_mode != PowerMode::Active) continue;
      detail::shed_on_host(h, (1.0 - theta) * h.load_units(), d);
    }
    return d;
  }
  auto over = detail::overloaded_hosts(cluster, params.tu_up);
  if (over.empty()) {
    detail::reactivate_all_optional(cluster, d);
    return d;
  }
  double theta =
      std::sqrt(static_cast<double>(over.size()) / static_cast<double>(cluster.host_count()));
  d.dimmer = theta;
  for (std::size_t i : over)
    detail::shed_on_host(cluster.hosts()[i], theta * cluster.hosts()[i].load_units(), d);
  return d;
}

// Batch admission. Jobs reaching their requested start are either released
// or pushed to the earliest slot whose predicted renewable supply exceeds
// predicted draw, within the deadline-feasible range. Every committed choice
// updates the planner so later jobs see the load.
inline std::vector<Deferral> defer_batch(std::span<const BatchJob> starting_jobs,
                                         const RenewableForecast& renewable,
                                         PowerPlanner& planner, int t) {
  std::vector<Deferral> out;
  for (const auto& job : starting_jobs) {
    int latest = job.latest_start();
    int td = -1;
    if (renewable.any() && t < renewable.t_end) {
      if (t < renewable.t_start) {
        // Ahead of the window: first green slot inside it, if the deadline
        // allows one; a deadline before the window means run now.
        for (int cand = renewable.t_start; cand <= latest && cand < planner.horizon(); ++cand)
          if (planner.surplus(cand)) {
            td = cand;
            break;
          }
      } else if (!planner.surplus(t)) {
        for (int cand = t + 1; cand <= latest && cand < planner.horizon(); ++cand)
          if (planner.surplus(cand)) {
            td = cand;
            break;
          }
      }
    }
    if (td >= 0) {
      planner.add_demand(td, job.exec, job.unit_util);
      out.push_back({job.id, td});
    } else {
      planner.add_demand(t, job.exec, job.unit_util);
    }
  }
  return out;
}

namespace detail {

// Server-watt increase of placing `units` more load on `host`. The source
// side of a move is identical across targets, so target-side delta is the
// whole ranking signal; cooling scales it by a constant.
inline double placement_delta(const HostState& host, double units) {
  double before = host.empty() ? 0.0
                               : host.spec.idle_watts +
                                     std::min(host.load_units() / host.spec.cpu_capacity, 1.0) *
                                         (host.spec.full_watts - host.spec.idle_watts);
  double after_load = host.load_units() + units;
  double after = host.spec.idle_watts +
                 std::min(after_load / host.spec.cpu_capacity, 1.0) *
                     (host.spec.full_watts - host.spec.idle_watts);
  return after - before;
}

inline std::optional<std::string> min_delta_target(const ClusterState& work,
                                                   const std::set<std::string>& excluded,
                                                   double vm_units, double tu_up) {
  std::optional<std::string> best;
  double best_delta = std::numeric_limits<double>::infinity();
  for (const auto& h : work.hosts()) {
    if (h.power_mode != PowerMode::Active) continue;
    if (excluded.count(h.spec.id)) continue;
    if (h.load_units() + vm_units > tu_up * h.spec.cpu_capacity + 1e-12) continue;
    double delta = placement_delta(h, vm_units);
    if (delta < best_delta - 1e-12 ||
        (delta < best_delta + 1e-12 && best && h.spec.id < *best)) {
      best_delta = delta;
      best = h.spec.id;
    }
  }
  return best;
}

// Drain one host onto minimum-increment targets. Partial drains are legal:
// a VM with no feasible target stays put. Moves are committed on `work` and
// appended to `d` as they happen.
inline bool drain_host(ClusterState& work, const std::string& host_id,
                       const std::set<std::string>& excluded, double tu_up,
                       PolicyDecision& d) {
  std::set<std::string> ex = excluded;
  ex.insert(host_id);  // a host cannot evacuate onto itself
  std::vector<std::pair<double, std::string>> vms;
  for (const auto& vm : work.host(host_id).vms) vms.push_back({vm.utilization(), vm.id});
  std::stable_sort(vms.begin(), vms.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  bool all_moved = true;
  for (const auto& [units, vm_id] : vms) {
    auto target = min_delta_target(work, ex, units, tu_up);
    if (!target) {
      all_moved = false;
      continue;
    }
    work.apply_migration(vm_id, *target);
    d.migrations.push_back({vm_id, *target});
  }
  return all_moved;
}

}  // namespace detail

// MBFD-style consolidation: hosts under the lower threshold hand their VMs,
// largest first, to whichever active host takes them with the smallest power
// increment while staying under the upper threshold. Hosts left empty drop
// to low power. Hosts still queued as sources are not targets; the last
// active host never powers down.
inline PolicyDecision consolidate_vms(const ClusterState& cluster, const PolicyParams& params) {
  PolicyDecision d;
  ClusterState work = cluster;

  std::vector<std::pair<double, std::string>> sources;
  for (const auto& h : work.hosts())
    if (h.power_mode == PowerMode::Active && h.utilization() < params.tu_low)
      sources.push_back({h.utilization(), h.spec.id});
  std::stable_sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });

  std::set<std::string> pending;
  for (const auto& [u, id] : sources) pending.insert(id);

  for (const auto& [u, id] : sources) {
    pending.erase(id);
    if (work.active_count() <= 1) break;
    if (!work.host(id).empty()) {
      // Per-source evacuation is atomic: a VM without a feasible target
      // keeps the host up, so none of its VMs should move at all.
      ClusterState snapshot = work;
      PolicyDecision attempt;
      if (!detail::drain_host(work, id, pending, params.tu_up, attempt)) {
        work = snapshot;
        continue;
      }
      for (auto& m : attempt.migrations) d.migrations.push_back(std::move(m));
    }
    work.set_power_mode(id, PowerMode::LowPower);
    d.power_changes.push_back({id, PowerMode::LowPower});
  }
  return d;
}

// Host scaling: fleet size follows predicted request volume at num_thr
// requests/s per host, floored at one. Two guards keep the request-driven
// count honest about load the prediction cannot see (batch work): active
// capacity never drops below current load / tu_up, and scale-down is
// skipped entirely while any host is overloaded. The green-surplus loop
// (GSA only) keeps adding hosts while predicted draw stays within renewable
// supply, counting each new host's idle draw (plus cooling overhead) as
// committed; the power model itself bills an empty host at zero, so the
// loop must. A surplus also suppresses scale-down, for the same reason the
// loop adds.
inline PolicyDecision scale_hosts(const ClusterState& cluster, double predicted_requests,
                                  const RenewableForecast& renewable,
                                  const PolicyParams& params, const PowerModelConfig& power_cfg,
                                  int t, bool green_loop) {
  if (predicted_requests < 0.0) throw ConfigError("predicted request rate must be non-negative");
  PolicyDecision d;
  ClusterState work = cluster;
  int n_target = std::max(1, static_cast<int>(std::ceil(predicted_requests / params.num_thr)));
  int delta = n_target - static_cast<int>(work.active_count());
  const double total_load = work.total_load_units();
  const double cap_floor = total_load / params.tu_up;

  double renewable_now = 0.0;
  if (t >= 0 && static_cast<std::size_t>(t) < renewable.watts.size())
    renewable_now = renewable.watts[static_cast<std::size_t>(t)];

  std::vector<std::pair<double, std::string>> spare;  // LowPower, cheapest idle first
  for (const auto& h : work.hosts())
    if (h.power_mode == PowerMode::LowPower) spare.push_back({h.spec.idle_watts, h.spec.id});
  std::stable_sort(spare.begin(), spare.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second < b.second;
  });

  const double cooling_factor = 1.0 + 1.0 / cop(power_cfg.t_sup_c);
  double committed_idle_w = 0.0;
  std::size_t next_spare = 0;

  auto activate_next = [&]() -> bool {
    if (next_spare >= spare.size()) return false;
    const std::string& id = spare[next_spare].second;
    work.set_power_mode(id, PowerMode::Active);
    d.power_changes.push_back({id, PowerMode::Active});
    committed_idle_w += spare[next_spare].first * cooling_factor;
    ++next_spare;
    return true;
  };

  if (delta > 0) {
    for (int k = 0; k < delta; ++k)
      if (!activate_next()) {
        d.fleet_exhausted = true;
        break;
      }
  } else if (delta < 0) {
    bool surplus_now =
        green_loop && renewable_now > 0.0 &&
        total_power(work, power_cfg).total_watts + committed_idle_w <= renewable_now;
    if (!surplus_now && detail::overloaded_hosts(work, params.tu_up).empty()) {
      int removable = std::min(-delta, static_cast<int>(work.active_count()) - 1);
      std::vector<std::pair<double, std::string>> actives;
      for (const auto& h : work.hosts())
        if (h.power_mode == PowerMode::Active) actives.push_back({h.utilization(), h.spec.id});
      std::stable_sort(actives.begin(), actives.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
      });
      int removed = 0;
      for (const auto& [u, id] : actives) {
        if (removed == removable) break;
        if (work.active_count() <= 1) break;
        if ((work.total_active_capacity() - work.host(id).spec.cpu_capacity) * params.tu_up <
            total_load - 1e-9)
          continue;  // removing this host would leave too little capacity
        if (!work.host(id).empty()) {
          ClusterState snapshot = work;
          PolicyDecision attempt;
          if (!detail::drain_host(work, id, {}, params.tu_up, attempt)) {
            work = snapshot;  // VM without a target: host stays up
            continue;
          }
          for (auto& m : attempt.migrations) d.migrations.push_back(std::move(m));
        }
        work.set_power_mode(id, PowerMode::LowPower);
        d.power_changes.push_back({id, PowerMode::LowPower});
        ++removed;
      }
    }
  }

  while (work.total_active_capacity() < cap_floor - 1e-9) {
    if (!activate_next()) {
      d.fleet_exhausted = true;
      break;
    }
  }

  if (green_loop && renewable_now > 0.0) {
    while (total_power(work, power_cfg).total_watts + committed_idle_w <= renewable_now) {
      if (!activate_next()) {
        d.fleet_exhausted = true;
        break;
      }
    }
  }
  return d;
}

struct PolicyContext {
  const RenewableForecast* renewable = nullptr;  // predicted series, full day
  PowerPlanner* planner = nullptr;               // required for gsa deferral
  double predicted_requests = 0.0;               // req/s, refreshed hourly
  PowerModelConfig power;
  int t = 0;
};

// One GSA control step. Brownout reacts every interval; deferral is the
// admission path for jobs reaching their start this interval; consolidation
// (when the fleet is underutilized) and scaling run on the hourly cadence.
inline PolicyDecision gsa_step(const ClusterState& cluster,
                               std::span<const BatchJob> starting_jobs,
                               const PolicyContext& ctx, const PolicyParams& params) {
  params.validate();
  if (!ctx.renewable) throw ConfigError("gsa step needs a renewable forecast");
  PolicyDecision d = brownout_interactive(cluster, *ctx.renewable, params, ctx.power, ctx.t);

  ClusterState work = cluster;
  for (const auto& x : d.deactivations) work.set_microservice_active(x.vm_id, x.ms_id, false);
  for (const auto& x : d.reactivations) work.set_microservice_active(x.vm_id, x.ms_id, true);

  if (!starting_jobs.empty()) {
    if (!ctx.planner) throw ConfigError("gsa step needs a power planner for deferral");
    d.deferrals = defer_batch(starting_jobs, *ctx.renewable, *ctx.planner, ctx.t);
  }

  if (ctx.t % params.scaling_cadence == 0) {
    if (work.average_active_utilization() < params.tu_low) {
      PolicyDecision c = consolidate_vms(work, params);
      apply_decision(work, c);
      d.merge(std::move(c));
    }
    d.merge(scale_hosts(work, ctx.predicted_requests, *ctx.renewable, params, ctx.power, ctx.t,
                        /*green_loop=*/true));
  }
  return d;
}

// Non-green baseline: consolidation and demand-driven scaling only. No
// brownout, no deferral, no surplus host additions.
inline PolicyDecision hs_baseline_step(const ClusterState& cluster, const PolicyContext& ctx,
                                       const PolicyParams& params) {
  params.validate();
  PolicyDecision d;
  if (ctx.t % params.scaling_cadence != 0) return d;
  ClusterState work = cluster;
  if (work.average_active_utilization() < params.tu_low) {
    PolicyDecision c = consolidate_vms(work, params);
    apply_decision(work, c);
    d.merge(std::move(c));
  }
  static const RenewableForecast no_renewable{};
  d.merge(scale_hosts(work, ctx.predicted_requests, ctx.renewable ? *ctx.renewable : no_renewable,
                      params, ctx.power, ctx.t, /*green_loop=*/false));
  return d;
}

}  // namespace greendc
