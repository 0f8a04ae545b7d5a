#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "greendc/cluster.hpp"
#include "greendc/forecast.hpp"
#include "greendc/policy.hpp"
#include "greendc/power.hpp"
#include "greendc/scenario.hpp"
#include "greendc/workload.hpp"

namespace greendc {

struct IntervalRecord {
  int t = 0;
  double server_w = 0.0, cooling_w = 0.0, total_w = 0.0;
  double renewable_w = 0.0, brown_w = 0.0, green_w = 0.0;
  double demand_units = 0.0;
  int active_hosts = 0;
  double mean_rt_ms = 0.0;
  double deactivated_pct = 0.0;  // fraction of interactive microservices inactive
};

struct SimEvent {
  int t = 0;
  std::string kind;  // deferral | completion | violation | saturation
  std::string detail;
};

struct MetricsReport {
  std::string policy, predictor;
  unsigned long seed = 0;
  int horizon = 0;
  double dt_s = 0.0;

  double brown_kwh = 0.0, green_kwh = 0.0, total_kwh = 0.0;
  double renewable_potential_kwh = 0.0;
  double mean_rt_ms = 0.0, p95_rt_ms = 0.0, p99_rt_ms = 0.0;
  int deadline_violations = 0;
  double deactivation_pct = 0.0;  // run mean, fraction
  int completed_jobs = 0, deferred_jobs = 0, incomplete_jobs = 0;
  int saturated_intervals = 0, overloaded_intervals = 0;
  int migrations = 0;
  double mean_active_hosts = 0.0;
  double batch_units_executed = 0.0, batch_units_expected = 0.0;

  std::vector<IntervalRecord> intervals;
  std::vector<SimEvent> events;
};

namespace detail {

struct InteractiveMs {
  std::string vm_id, ms_id;
  double weight = 0.0;
  bool optional_flag = false;
};

}  // namespace detail

class Simulation {
public:
  explicit Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {}

  MetricsReport run() {
    cfg_.validate();
    if (std::fmod(3600.0, cfg_.dt_s) != 0.0)
      throw ConfigError("dt_s must divide one hour");
    const int iph = static_cast<int>(3600.0 / cfg_.dt_s);

    ClusterState cluster = ClusterState::from_csv(cfg_.cluster_file);
    std::vector<double> rates = load_interactive_trace(cfg_.interactive_file);
    if (static_cast<int>(rates.size()) < cfg_.horizon)
      throw ConfigError("interactive trace has " + std::to_string(rates.size()) +
                        " intervals but horizon is " + std::to_string(cfg_.horizon));
    BatchTrace batch = load_batch_trace(cfg_.batch_file, cfg_.dt_s);
    std::vector<BatchJob> jobs;
    for (const auto& j : batch.jobs)
      if (j.start < cfg_.horizon) jobs.push_back(j);
    std::stable_sort(jobs.begin(), jobs.end(), [](const auto& a, const auto& b) {
      if (a.start != b.start) return a.start < b.start;
      return a.id < b.id;
    });
    std::vector<SolarRecord> solar = load_irradiance(cfg_.solar_file);

    const int hours_needed = (cfg_.horizon + iph - 1) / iph;
    if (static_cast<int>(solar.size()) < hours_needed)
      throw ConfigError("solar trace has " + std::to_string(solar.size()) +
                        " hours but the run needs " + std::to_string(hours_needed));

    RenewableForecast actual = build_renewable(
        {solar.end() - hours_needed, solar.end()}, iph);
    RenewableForecast predicted = build_prediction(solar, hours_needed, iph);
    predicted_ptr_ = &predicted;

    if (!jobs.empty() && cfg_.batch_vms < 1)
      throw ConfigError("batch trace has jobs but the scenario deploys no batch vms");

    InteractiveWorkload web{"web", rates, cfg_.service_rate, cfg_.target_rt_s};
    web.validate();

    deploy(cluster, web);

    MetricsReport rep;
    rep.policy = cfg_.policy;
    rep.predictor = cfg_.predictor;
    rep.seed = cfg_.seed;
    rep.horizon = cfg_.horizon;
    rep.dt_s = cfg_.dt_s;

    PolicyParams params = cfg_.policy_params;
    const bool gsa = cfg_.policy == "gsa";

    std::vector<PowerSample> samples;
    std::vector<double> hourly_rates;  // prediction window, oldest first
    double predicted_requests = rates[0];
    std::set<std::string> ever_deferred;
    double rt_weight_sum = 0.0, rt_weighted = 0.0, deact_sum = 0.0, active_sum = 0.0;
    std::vector<std::pair<double, double>> rt_samples;  // (rt_ms, request weight)
    int completions_logged_late = 0;

    for (int t = 0; t < cfg_.horizon; ++t) {
      refresh_interactive(cluster, web, t);
      refresh_batch(cluster, jobs, t, /*include_starting_now=*/false);

      if (t % params.scaling_cadence == 0) {
        if (t > 0) {
          double sum = 0.0;
          for (int k = t - params.scaling_cadence; k < t; ++k)
            sum += rates[static_cast<std::size_t>(k)];
          hourly_rates.push_back(sum / params.scaling_cadence);
        } else {
          hourly_rates.push_back(rates[0]);
        }
        if (hourly_rates.size() > 3) hourly_rates.erase(hourly_rates.begin());
        predicted_requests = predict_requests(hourly_rates);
      }

      std::vector<BatchJob> starting;
      for (const auto& j : jobs)
        if (j.scheduled_start == t) starting.push_back(j);

      PowerPlanner planner = make_planner(cluster, web, jobs, t);
      PolicyContext ctx;
      ctx.renewable = &predicted;
      ctx.planner = &planner;
      ctx.predicted_requests = predicted_requests;
      ctx.power = cfg_.power;
      ctx.t = t;

      PolicyDecision decision = gsa ? gsa_step(cluster, starting, ctx, params)
                                    : hs_baseline_step(cluster, ctx, params);

      for (const auto& dfr : decision.deferrals) {
        BatchJob* job = find_job(jobs, dfr.job_id);
        if (!job) throw InvariantViolationError("deferral names unknown job " + dfr.job_id);
        if (dfr.to_interval <= t || dfr.to_interval + job->exec > job->deadline)
          throw InvariantViolationError("deferral of " + dfr.job_id +
                                        " breaks its deadline window");
        job->scheduled_start = dfr.to_interval;
        ever_deferred.insert(job->id);
        rep.events.push_back({t, "deferral", job->id + "->" +
                                                 std::to_string(dfr.to_interval)});
      }
      apply_decision(cluster, decision);
      int interval_migrations = static_cast<int>(decision.migrations.size());

      refresh_batch(cluster, jobs, t, /*include_starting_now=*/true);

      bool activated = false;
      for (const auto& pc : decision.power_changes)
        if (pc.mode == PowerMode::Active) activated = true;
      if (activated) interval_migrations += rebalance(cluster, params);
      rep.migrations += interval_migrations;

      // Evaluation: per-host grant factors cap interactive allocations when
      // a host is pushed past capacity; brownout retention scales both the
      // work per request and the achieved response time.
      bool overloaded = false;
      std::map<std::string, double> grant;
      for (const auto& h : cluster.hosts()) {
        double g = 1.0;
        if (h.load_units() > h.spec.cpu_capacity * (1.0 + 1e-9)) {
          overloaded = true;
          g = h.spec.cpu_capacity / h.load_units();
        }
        grant[h.spec.id] = g;
      }
      if (overloaded) ++rep.overloaded_intervals;

      double lambda = rates[static_cast<std::size_t>(t)];
      double retention = 0.0, granted = 0.0;
      for (const auto& ms : ims_) {
        const VmState& state = cluster.vm(ms.vm_id);
        for (const auto& m : state.microservices)
          if (m.id == ms.ms_id && m.active) {
            retention += ms.weight;
            granted += m.utilization * grant[cluster.vm_host(ms.vm_id)];
          }
      }
      double rt_s;
      if (lambda <= 1e-12) {
        rt_s = retention > 0.0 ? retention / cfg_.service_rate : 1.0 / cfg_.service_rate;
      } else {
        auto rt = response_time(lambda, cfg_.service_rate, granted / retention);
        if (!rt) {
          rt_s = cfg_.saturation_penalty * cfg_.target_rt_s;
          ++rep.saturated_intervals;
          rep.events.push_back({t, "saturation", "web"});
        } else {
          rt_s = retention * *rt;
        }
      }

      double batch_units = 0.0;
      for (const auto& j : jobs)
        if (j.running_at(t)) batch_units += j.unit_util;

      ClusterPower cp = total_power(cluster, cfg_.power);
      double surcharge_w =
          interval_migrations * cfg_.migration_wh * 3600.0 / cfg_.dt_s;
      double server_w = cp.server_watts + surcharge_w;
      double cooling_w = cooling_power(server_w, cfg_.power.t_sup_c);
      PowerSample sample = PowerSample::make(t, server_w, cooling_w, actual.at(t));
      samples.push_back(sample);

      int inactive = 0;
      for (const auto& ms : ims_) {
        const VmState& vm = cluster.vm(ms.vm_id);
        for (const auto& m : vm.microservices)
          if (m.id == ms.ms_id && !m.active) ++inactive;
      }
      double deact_frac = ims_.empty() ? 0.0 : static_cast<double>(inactive) /
                                                    static_cast<double>(ims_.size());

      IntervalRecord rec;
      rec.t = t;
      rec.server_w = sample.server_watts;
      rec.cooling_w = sample.cooling_watts;
      rec.total_w = sample.total_watts;
      rec.renewable_w = sample.renewable_watts;
      rec.brown_w = sample.brown_watts;
      rec.green_w = sample.green_watts;
      rec.demand_units = granted + batch_units;
      rec.active_hosts = static_cast<int>(cluster.active_count());
      rec.mean_rt_ms = rt_s * 1000.0;
      rec.deactivated_pct = deact_frac;
      rep.intervals.push_back(rec);


      double weight = lambda * cfg_.dt_s;
      rt_weight_sum += weight;
      rt_weighted += weight * rt_s;
      rt_samples.push_back({rt_s * 1000.0, weight});
      deact_sum += deact_frac;
      active_sum += static_cast<double>(rec.active_hosts);

      for (const auto& j : jobs) {
        if (j.completion() == t + 1 && j.running_at(t)) {
          rep.events.push_back({t, "completion", j.id});
          ++rep.completed_jobs;
          if (j.completion() > j.deadline) {
            rep.events.push_back({t, "violation", j.id});
            ++completions_logged_late;
          }
        }
      }
    }

    // Deadline accounting from final schedules, cross-checked against the
    // event log so a miss can never pass silently.
    int violations_scan = 0;
    for (const auto& j : jobs) {
      if (j.completion() > cfg_.horizon) {
        ++rep.incomplete_jobs;
        continue;
      }
      rep.batch_units_expected += j.total_units();
      if (j.completion() > j.deadline) ++violations_scan;
    }
    if (violations_scan != completions_logged_late)
      throw InvariantViolationError("deadline scan disagrees with event log");
    rep.deadline_violations = violations_scan;
    for (const auto& j : jobs)
      if (j.completion() <= cfg_.horizon)
        rep.batch_units_executed += j.total_units();
    rep.deferred_jobs = static_cast<int>(ever_deferred.size());

    EnergyTotals e = energy_accounting(samples, cfg_.dt_s);
    rep.brown_kwh = e.brown_kwh;
    rep.green_kwh = e.green_kwh;
    rep.total_kwh = e.total_kwh;
    for (const auto& s : samples)
      rep.renewable_potential_kwh += s.renewable_watts * cfg_.dt_s / 3.6e6;

    if (rt_weight_sum > 0.0) {
      rep.mean_rt_ms = rt_weighted / rt_weight_sum * 1000.0;
    } else {
      double s = 0.0;
      for (const auto& [rt, w] : rt_samples) s += rt;
      rep.mean_rt_ms = rt_samples.empty() ? 0.0 : s / static_cast<double>(rt_samples.size());
    }
    rep.p95_rt_ms = weighted_percentile(rt_samples, 0.95);
    rep.p99_rt_ms = weighted_percentile(rt_samples, 0.99);
    rep.deactivation_pct = deact_sum / static_cast<double>(cfg_.horizon);
    rep.mean_active_hosts = active_sum / static_cast<double>(cfg_.horizon);
    return rep;
  }

private:
  RenewableForecast build_renewable(std::vector<SolarRecord> hours, int iph) const {
    std::vector<double> ghi;
    for (const auto& r : hours) ghi.push_back(r.ghi);
    RenewableForecast f =
        renewable_from_hourly(ghi, iph, cfg_.panel_kw, cfg_.panel_efficiency);
    trim(f);
    return f;
  }

  void trim(RenewableForecast& f) const {
    if (static_cast<int>(f.watts.size()) > cfg_.horizon) {
      f.watts.resize(static_cast<std::size_t>(cfg_.horizon));
      f.t_start = -1;
      f.t_end = -1;
      double thr = 0.01 * cfg_.panel_kw * 1000.0;
      for (std::size_t t = 0; t < f.watts.size(); ++t)
        if (f.watts[t] > thr) {
          if (f.t_start < 0) f.t_start = static_cast<int>(t);
          f.t_end = static_cast<int>(t) + 1;
        }
    }
  }

  RenewableForecast build_prediction(const std::vector<SolarRecord>& solar, int hours_needed,
                                     int iph) const {
    if (cfg_.predictor == "oracle")
      return build_renewable({solar.end() - hours_needed, solar.end()}, iph);
    if (cfg_.predictor == "persistence") {
      if (static_cast<int>(solar.size()) < hours_needed + 24)
        throw ConfigError("persistence prediction needs 24h of history before the run day");
      return build_renewable(
          {solar.end() - hours_needed - 24, solar.end() - 24}, iph);
    }
    // svr: train on everything before the simulated day, predict it.
    std::vector<SolarRecord> history(solar.begin(), solar.end() - hours_needed);
    SolarModel model = SolarModel::train(history);
    std::vector<double> ghi = model.predict_hours(static_cast<std::size_t>(hours_needed));
    RenewableForecast f =
        renewable_from_hourly(ghi, iph, cfg_.panel_kw, cfg_.panel_efficiency);
    trim(f);
    return f;
  }

  void deploy(ClusterState& cluster, const InteractiveWorkload& web) {
    ims_.clear();
    batch_vm_ids_.clear();

    std::mt19937_64 rng(cfg_.seed ^ 0x5bf03635d1f4bc18ULL);
    std::uniform_real_distribution<double> wdist(0.6, 1.4);
    const int m = cfg_.microservices;
    std::vector<double> weights(static_cast<std::size_t>(m));
    double wsum = 0.0;
    for (auto& w : weights) {
      w = wdist(rng);
      wsum += w;
    }
    for (auto& w : weights) w /= wsum;

    std::vector<int> order(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) order[static_cast<std::size_t>(k)] = k;
    std::shuffle(order.begin(), order.end(), rng);
    int optional_count = static_cast<int>(std::lround(cfg_.optional_fraction * m));
    std::set<int> optional_set(order.begin(), order.begin() + optional_count);

    double demand0 = web.demand(0);
    std::vector<VmState> vms;
    char buf[32];
    for (int v = 0; v < cfg_.interactive_vms; ++v) {
      std::snprintf(buf, sizeof buf, "ivm-%02d", v);
      vms.push_back(VmState{buf, {}});
    }
    for (int k = 0; k < m; ++k) {
      std::snprintf(buf, sizeof buf, "web-ms-%02d", k);
      MicroserviceState ms;
      ms.id = buf;
      ms.utilization = weights[static_cast<std::size_t>(k)] * demand0;
      ms.optionality =
          optional_set.count(k) ? Optionality::Optional : Optionality::Mandatory;
      std::size_t vm = static_cast<std::size_t>(k % cfg_.interactive_vms);
      ims_.push_back({vms[vm].id, ms.id, weights[static_cast<std::size_t>(k)],
                      ms.optionality == Optionality::Optional});
      vms[vm].microservices.push_back(std::move(ms));
    }
    for (int v = 0; v < cfg_.batch_vms; ++v) {
      std::snprintf(buf, sizeof buf, "bvm-%02d", v);
      VmState vm{buf, {}};
      std::snprintf(buf, sizeof buf, "batch-worker-%02d", v);
      vm.microservices.push_back(MicroserviceState{buf, 0.0, Optionality::Mandatory, true});
      batch_vm_ids_.push_back(vm.id);
      vms.push_back(std::move(vm));
    }

    std::stable_sort(vms.begin(), vms.end(), [](const VmState& a, const VmState& b) {
      double ua = a.utilization(), ub = b.utilization();
      if (ua != ub) return ua > ub;
      return a.id < b.id;
    });
    for (auto& vm : vms) {
      std::size_t best = cluster.host_count();
      double best_util = std::numeric_limits<double>::infinity();
      bool best_fits = false;
      double need = vm.utilization();
      for (std::size_t i = 0; i < cluster.host_count(); ++i) {
        const HostState& h = cluster.hosts()[i];
        if (h.power_mode != PowerMode::Active) continue;
        bool fits = h.load_units() + need <= h.spec.cpu_capacity + 1e-9;
        double result = (h.load_units() + need) / h.spec.cpu_capacity;
        if ((fits && !best_fits) || ((fits == best_fits) && result < best_util)) {
          best = i;
          best_util = result;
          best_fits = fits;
        }
      }
      if (best == cluster.host_count())
        throw ConfigError("no active host available for initial placement");
      cluster.hosts()[best].vms.push_back(std::move(vm));
    }
  }

  void refresh_interactive(ClusterState& cluster, const InteractiveWorkload& web, int t) {
    double demand = web.demand(t);
    for (const auto& ms : ims_)
      cluster.microservice(ms.vm_id, ms.ms_id).utilization = ms.weight * demand;
  }

  void refresh_batch(ClusterState& cluster, const std::vector<BatchJob>& jobs, int t,
                     bool include_starting_now) {
    if (batch_vm_ids_.empty()) return;
    std::vector<double> load(batch_vm_ids_.size(), 0.0);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const BatchJob& j = jobs[i];
      if (!j.running_at(t)) continue;
      if (!include_starting_now && j.scheduled_start == t) continue;
      load[i % batch_vm_ids_.size()] += j.unit_util;
    }
    for (std::size_t v = 0; v < batch_vm_ids_.size(); ++v) {
      VmState& vm = vm_mut(cluster, batch_vm_ids_[v]);
      vm.microservices.front().utilization = load[v];
    }
  }

  static VmState& vm_mut(ClusterState& cluster, const std::string& vm_id) {
    VmLocation loc = cluster.locate_vm(vm_id);
    return cluster.hosts()[loc.host_index].vms[loc.vm_index];
  }

  static BatchJob* find_job(std::vector<BatchJob>& jobs, const std::string& id) {
    for (auto& j : jobs)
      if (j.id == id) return &j;
    return nullptr;
  }

  PowerPlanner make_planner(const ClusterState& cluster, const InteractiveWorkload& web,
                            const std::vector<BatchJob>& jobs, int t) const {
    std::vector<double> demand(static_cast<std::size_t>(cfg_.horizon), 0.0);
    for (int tau = 0; tau < cfg_.horizon; ++tau)
      demand[static_cast<std::size_t>(tau)] = web.demand(tau);
    for (const auto& j : jobs) {
      if (j.scheduled_start == t) continue;  // being decided this interval
      for (int tau = std::max(0, j.scheduled_start);
           tau < std::min(cfg_.horizon, j.scheduled_start + j.exec); ++tau)
        demand[static_cast<std::size_t>(tau)] += j.unit_util;
    }
    return PowerPlanner(cluster, cfg_.power, cfg_.policy_params.tu_up, std::move(demand),
                        predicted_ptr_);
  }

  // Platform-side placement of fresh capacity: newly activated (empty)
  // hosts pull VMs from the most loaded hosts until they sit near the
  // cluster mean, never pushing a receiver past tu_up.
  int rebalance(ClusterState& cluster, const PolicyParams& params) {
    int moves = 0;
    double cap = cluster.total_active_capacity();
    if (cap <= 0.0) return 0;
    double avg = cluster.total_load_units() / cap;
    for (std::size_t i = 0; i < cluster.host_count(); ++i) {
      HostState& h = cluster.hosts()[i];
      if (h.power_mode != PowerMode::Active || !h.empty()) continue;
      double target_units = avg * h.spec.cpu_capacity;
      int guard = 0;
      while (h.load_units() < target_units - 1e-9 && guard++ < 64) {
        std::size_t donor = cluster.host_count();
        double donor_util = avg + 1e-9;
        for (std::size_t k = 0; k < cluster.host_count(); ++k) {
          if (k == i) continue;
          const HostState& d = cluster.hosts()[k];
          if (d.power_mode != PowerMode::Active) continue;
          if (d.utilization() > donor_util) {
            donor_util = d.utilization();
            donor = k;
          }
        }
        if (donor == cluster.host_count()) break;
        const HostState& d = cluster.hosts()[donor];
        std::string pick;
        double pick_err = std::numeric_limits<double>::infinity();
        for (const auto& vm : d.vms) {
          double u = vm.utilization();
          if (u <= 1e-12) continue;
          if (h.load_units() + u > params.tu_up * h.spec.cpu_capacity + 1e-12) continue;
          double err = std::abs(h.load_units() + u - target_units);
          if (err < pick_err - 1e-12 || (std::abs(err - pick_err) <= 1e-12 && vm.id < pick)) {
            pick_err = err;
            pick = vm.id;
          }
        }
        if (pick.empty()) break;
        cluster.apply_migration(pick, h.spec.id);
        ++moves;
      }
    }
    return moves;
  }

  static double weighted_percentile(std::vector<std::pair<double, double>> samples, double q) {
    if (samples.empty()) return 0.0;
    std::stable_sort(samples.begin(), samples.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    double total = 0.0;
    for (const auto& [v, w] : samples) total += w;
    if (total <= 0.0) {
      std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(samples.size() - 1));
      return samples[idx].first;
    }
    double acc = 0.0;
    for (const auto& [v, w] : samples) {
      acc += w;
      if (acc >= q * total) return v;
    }
    return samples.back().first;
  }

  ScenarioConfig cfg_;
  std::vector<detail::InteractiveMs> ims_;
  std::vector<std::string> batch_vm_ids_;
  const RenewableForecast* predicted_ptr_ = nullptr;
};

}  // namespace greendc
