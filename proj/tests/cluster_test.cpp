#include <greendc/cluster.hpp>

#include <gtest/gtest.h>

#include "testutil.hpp"

using namespace greendc;

namespace {

ClusterState two_hosts() {
  std::vector<HostState> hosts;
  hosts.push_back(gdt::host("a", 153.0, 230.0, 3.0));
  hosts.back().vms.push_back(gdt::vm("v0", {{"m0", 1.5}}));
  hosts.push_back(gdt::host("b", 60.0, 150.0, 1.0));
  hosts.back().vms.push_back(gdt::vm("v1", {{"m1", 0.5}}));
  return ClusterState{std::move(hosts)};
}

}  // namespace

TEST(VmUtilization, CountsActiveServicesOnly) {
  VmState v = gdt::vm("v", {{"on", 0.1}, {"off", 0.2, true, false}});
  EXPECT_DOUBLE_EQ(v.utilization(), 0.1);
}

TEST(Cluster, AggregateReads) {
  ClusterState c = two_hosts();
  EXPECT_EQ(c.host_count(), 2u);
  EXPECT_EQ(c.active_count(), 2u);
  EXPECT_DOUBLE_EQ(c.total_active_capacity(), 4.0);
  EXPECT_DOUBLE_EQ(c.total_load_units(), 2.0);
  EXPECT_DOUBLE_EQ(c.average_active_utilization(), 0.5);
  EXPECT_EQ(c.vm_host("v1"), "b");
  EXPECT_TRUE(c.has_vm("v0"));
  EXPECT_FALSE(c.has_vm("v9"));
  EXPECT_THROW(c.host_index("zz"), UnknownHostError);
  EXPECT_THROW(c.locate_vm("v9"), UnknownVmError);
}

TEST(Cluster, LowPowerHostsLeaveTheAggregates) {
  ClusterState c = two_hosts();
  c.hosts()[1].vms.clear();
  c.set_power_mode("b", PowerMode::LowPower);
  EXPECT_EQ(c.active_count(), 1u);
  EXPECT_DOUBLE_EQ(c.total_active_capacity(), 3.0);
  EXPECT_DOUBLE_EQ(c.average_active_utilization(), 0.5);
}

TEST(Migration, MovesLoadBetweenHosts) {
  ClusterState c = two_hosts();
  c.apply_migration("v1", "a");
  EXPECT_EQ(c.vm_host("v1"), "a");
  EXPECT_DOUBLE_EQ(c.host("a").load_units(), 2.0);
  EXPECT_DOUBLE_EQ(c.host("b").load_units(), 0.0);
}

TEST(Migration, SameHostIsANoOp) {
  ClusterState c = two_hosts();
  c.apply_migration("v0", "a");
  EXPECT_EQ(c.vm_host("v0"), "a");
  EXPECT_EQ(c.host("a").vms.size(), 1u);
}

TEST(Migration, RejectsLowPowerTarget) {
  ClusterState c = two_hosts();
  c.hosts()[1].vms.clear();
  c.set_power_mode("b", PowerMode::LowPower);
  EXPECT_THROW(c.apply_migration("v0", "b"), TargetLowPowerError);
  EXPECT_EQ(c.vm_host("v0"), "a");  // unchanged on throw
}

TEST(Migration, RejectsOverCapacityPlacement) {
  ClusterState c = two_hosts();
  EXPECT_THROW(c.apply_migration("v0", "b"), CapacityExceededError);  // 1.5 onto cap 1.0
  EXPECT_EQ(c.vm_host("v0"), "a");
}

TEST(PowerModeChange, RequiresEmptyAndNotLast) {
  ClusterState c = two_hosts();
  EXPECT_THROW(c.set_power_mode("b", PowerMode::LowPower), HostNotEmptyError);
  c.hosts()[1].vms.clear();
  c.set_power_mode("b", PowerMode::LowPower);
  c.set_power_mode("b", PowerMode::LowPower);  // same mode: no-op
  c.hosts()[0].vms.clear();
  EXPECT_THROW(c.set_power_mode("a", PowerMode::LowPower), LastActiveHostError);
  c.set_power_mode("b", PowerMode::Active);
  c.set_power_mode("a", PowerMode::LowPower);
  EXPECT_EQ(c.active_count(), 1u);
}

TEST(MicroserviceFlags, MandatoryServicesCannotBeShed) {
  ClusterState c = two_hosts();
  EXPECT_THROW(c.set_microservice_active("v0", "m0", false), InvariantViolationError);
  c.hosts()[0].vms[0].microservices.push_back(
      {"opt", 0.3, Optionality::Optional, true});
  c.set_microservice_active("v0", "opt", false);
  EXPECT_DOUBLE_EQ(c.host("a").load_units(), 1.5);
  c.set_microservice_active("v0", "opt", true);
  EXPECT_DOUBLE_EQ(c.host("a").load_units(), 1.8);
  EXPECT_THROW(c.set_microservice_active("v0", "zz", false), UnknownVmError);
}

TEST(ClusterCsv, RoundTripsSpecs) {
  std::string path = gdt::write_file("cluster_ok.csv",
                                     "host_id,machine_class,cores,idle_watts,full_watts,"
                                     "cpu_capacity\n"
                                     "h0,x3500-m4,12,153,230,3.0\n"
                                     "h1,optiplex-990,4,26,106,1.0\n");
  ClusterState c = ClusterState::from_csv(path);
  ASSERT_EQ(c.host_count(), 2u);
  EXPECT_EQ(c.hosts()[0].spec.machine_class, "x3500-m4");
  EXPECT_DOUBLE_EQ(c.hosts()[0].spec.full_watts, 230.0);
  EXPECT_DOUBLE_EQ(c.hosts()[1].spec.cpu_capacity, 1.0);
  EXPECT_EQ(c.active_count(), 2u);
}

TEST(ClusterCsv, RejectsBadInput) {
  EXPECT_THROW(ClusterState::from_csv(gdt::write_file("cluster_hdr.csv", "host_id,cores\n")),
               ParseError);
  EXPECT_THROW(ClusterState::from_csv(gdt::write_file(
                   "cluster_val.csv",
                   "host_id,machine_class,cores,idle_watts,full_watts,cpu_capacity\n"
                   "h0,x,4,100,50,1.0\n")),  // full < idle
               ParseError);
  EXPECT_THROW(ClusterState::from_csv("/nonexistent/cluster.csv"), IoError);
}

TEST(Invariants, CatchBrokenState) {
  ClusterState c = two_hosts();
  c.check_invariants();
  c.hosts()[1].power_mode = PowerMode::LowPower;  // still holds v1
  EXPECT_THROW(c.check_invariants(), InvariantViolationError);
  c.hosts()[1].power_mode = PowerMode::Active;
  c.hosts()[0].vms[0].microservices[0].active = false;  // mandatory forced off
  EXPECT_THROW(c.check_invariants(), InvariantViolationError);
}
