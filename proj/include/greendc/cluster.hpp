#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "greendc/csv.hpp"
#include "greendc/errors.hpp"

namespace greendc {

enum class PowerMode { Active, LowPower };
enum class Optionality { Mandatory, Optional };

struct HostSpec {
  std::string id;
  std::string machine_class;
  int cores = 1;
  double idle_watts = 0.0;
  double full_watts = 0.0;
  double cpu_capacity = 1.0;  // utilization units this host can serve

  void validate() const {
    if (id.empty()) throw ConfigError("host id must not be empty");
    if (cores <= 0) throw ConfigError(id + ": cores must be positive");
    if (cpu_capacity <= 0.0) throw ConfigError(id + ": cpu_capacity must be positive");
    if (idle_watts < 0.0 || full_watts < idle_watts)
      throw ConfigError(id + ": need 0 <= idle_watts <= full_watts");
  }
};

struct MicroserviceState {
  std::string id;
  double utilization = 0.0;  // demand assigned this interval, kept while inactive
  Optionality optionality = Optionality::Mandatory;
  bool active = true;
};

struct VmState {
  std::string id;
  std::vector<MicroserviceState> microservices;

  // Utilization of a VM is the sum over its active microservices.
  double utilization() const {
    double u = 0.0;
    for (const auto& m : microservices)
      if (m.active) u += m.utilization;
    return u;
  }
};

struct HostState {
  HostSpec spec;
  PowerMode power_mode = PowerMode::Active;
  std::vector<VmState> vms;

  // Raw load in utilization units.
  double load_units() const {
    double u = 0.0;
    for (const auto& vm : vms) u += vm.utilization();
    return u;
  }

  // Normalized utilization in [0, ...); may exceed 1 under overload,
  // the engine records that as a flag instead of clipping.
  double utilization() const {
    if (power_mode == PowerMode::LowPower) return 0.0;
    return load_units() / spec.cpu_capacity;
  }

  bool empty() const { return vms.empty(); }
};

struct VmLocation {
  std::size_t host_index = 0;
  std::size_t vm_index = 0;
};

class ClusterState {
public:
  ClusterState() = default;

  explicit ClusterState(std::vector<HostState> hosts) : hosts_(std::move(hosts)) {
    for (const auto& h : hosts_) h.spec.validate();
    for (std::size_t i = 0; i < hosts_.size(); ++i)
      for (std::size_t j = i + 1; j < hosts_.size(); ++j)
        if (hosts_[i].spec.id == hosts_[j].spec.id)
          throw ConfigError("duplicate host id: " + hosts_[i].spec.id);
    if (hosts_.empty()) throw ConfigError("cluster needs at least one host");
  }

  // Loads the cluster description table:
  //   host_id,machine_class,cores,idle_watts,full_watts,cpu_capacity
  static ClusterState from_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    require_header(t, {"host_id", "machine_class", "cores", "idle_watts",
                       "full_watts", "cpu_capacity"},
                   path);
    std::vector<HostState> hosts;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& r = t.rows[i];
      std::size_t row = t.row_numbers[i];
      HostSpec s;
      s.id = r[0];
      s.machine_class = r[1];
      s.cores = static_cast<int>(parse_long(r[2], "cores", row));
      s.idle_watts = parse_double(r[3], "idle_watts", row);
      s.full_watts = parse_double(r[4], "full_watts", row);
      s.cpu_capacity = parse_double(r[5], "cpu_capacity", row);
      try {
        s.validate();
      } catch (const ConfigError& e) {
        throw ParseError(std::string(e.what()), row);
      }
      hosts.push_back(HostState{s, PowerMode::Active, {}});
    }
    return ClusterState(std::move(hosts));
  }

  const std::vector<HostState>& hosts() const { return hosts_; }
  std::vector<HostState>& hosts() { return hosts_; }

  std::size_t host_count() const { return hosts_.size(); }

  std::size_t active_count() const {
    std::size_t n = 0;
    for (const auto& h : hosts_)
      if (h.power_mode == PowerMode::Active) ++n;
    return n;
  }

  double total_active_capacity() const {
    double c = 0.0;
    for (const auto& h : hosts_)
      if (h.power_mode == PowerMode::Active) c += h.spec.cpu_capacity;
    return c;
  }

  double total_load_units() const {
    double u = 0.0;
    for (const auto& h : hosts_) u += h.load_units();
    return u;
  }

  // Mean normalized utilization over active hosts, weighted by capacity.
  double average_active_utilization() const {
    double cap = total_active_capacity();
    if (cap <= 0.0) return 0.0;
    double load = 0.0;
    for (const auto& h : hosts_)
      if (h.power_mode == PowerMode::Active) load += h.load_units();
    return load / cap;
  }

  std::size_t host_index(std::string_view id) const {
    for (std::size_t i = 0; i < hosts_.size(); ++i)
      if (hosts_[i].spec.id == id) return i;
    throw UnknownHostError(std::string(id));
  }

  const HostState& host(std::string_view id) const { return hosts_[host_index(id)]; }

  bool has_vm(std::string_view vm_id) const {
    for (const auto& h : hosts_)
      for (const auto& vm : h.vms)
        if (vm.id == vm_id) return true;
    return false;
  }

  VmLocation locate_vm(std::string_view vm_id) const {
    for (std::size_t i = 0; i < hosts_.size(); ++i)
      for (std::size_t j = 0; j < hosts_[i].vms.size(); ++j)
        if (hosts_[i].vms[j].id == vm_id) return {i, j};
    throw UnknownVmError(std::string(vm_id));
  }

  const VmState& vm(std::string_view vm_id) const {
    VmLocation loc = locate_vm(vm_id);
    return hosts_[loc.host_index].vms[loc.vm_index];
  }

  const std::string& vm_host(std::string_view vm_id) const {
    return hosts_[locate_vm(vm_id).host_index].spec.id;
  }

  // Moves a VM. Moving onto its current host is an idempotent no-op.
  // Throws if the VM is unknown, the target is unknown or LowPower, or the
  // target lacks spare capacity for the VM's current utilization. State is
  // unchanged on throw.
  void apply_migration(std::string_view vm_id, std::string_view target_host_id) {
    VmLocation src = locate_vm(vm_id);
    std::size_t dst = host_index(target_host_id);
    if (dst == src.host_index) return;
    HostState& to = hosts_[dst];
    if (to.power_mode == PowerMode::LowPower)
      throw TargetLowPowerError(std::string(target_host_id));
    double need = hosts_[src.host_index].vms[src.vm_index].utilization();
    if (to.load_units() + need > to.spec.cpu_capacity + 1e-9)
      throw CapacityExceededError("cannot place " + std::string(vm_id) + " on " +
                                  std::string(target_host_id) + ": load " +
                                  std::to_string(to.load_units() + need) + " over capacity " +
                                  std::to_string(to.spec.cpu_capacity));
    VmState moved = std::move(hosts_[src.host_index].vms[src.vm_index]);
    hosts_[src.host_index].vms.erase(hosts_[src.host_index].vms.begin() +
                                     static_cast<std::ptrdiff_t>(src.vm_index));
    to.vms.push_back(std::move(moved));
  }

  // Power-mode change. Active -> LowPower requires the host to be empty and
  // not the last active one. Same-mode transitions are no-ops.
  void set_power_mode(std::string_view host_id, PowerMode mode) {
    HostState& h = hosts_[host_index(host_id)];
    if (h.power_mode == mode) return;
    if (mode == PowerMode::LowPower) {
      if (!h.empty()) throw HostNotEmptyError(std::string(host_id));
      if (active_count() <= 1) throw LastActiveHostError(std::string(host_id));
    }
    h.power_mode = mode;
  }

  MicroserviceState& microservice(std::string_view vm_id, std::string_view ms_id) {
    VmLocation loc = locate_vm(vm_id);
    for (auto& m : hosts_[loc.host_index].vms[loc.vm_index].microservices)
      if (m.id == ms_id) return m;
    throw UnknownVmError(std::string(vm_id) + "/" + std::string(ms_id));
  }

  // Brownout surface. Deactivating a Mandatory microservice is refused.
  void set_microservice_active(std::string_view vm_id, std::string_view ms_id, bool active) {
    MicroserviceState& m = microservice(vm_id, ms_id);
    if (!active && m.optionality == Optionality::Mandatory)
      throw InvariantViolationError("mandatory microservice cannot be deactivated: " +
                                    std::string(ms_id));
    m.active = active;
  }

  // Model invariants that must hold between engine steps.
  void check_invariants() const {
    if (active_count() < 1)
      throw InvariantViolationError("no active hosts");
    for (const auto& h : hosts_) {
      if (h.power_mode == PowerMode::LowPower && !h.empty())
        throw InvariantViolationError("low-power host holds vms: " + h.spec.id);
      for (const auto& vm : h.vms)
        for (const auto& m : vm.microservices)
          if (!m.active && m.optionality == Optionality::Mandatory)
            throw InvariantViolationError("mandatory microservice inactive: " + m.id);
    }
  }

private:
  std::vector<HostState> hosts_;
};

}  // namespace greendc
