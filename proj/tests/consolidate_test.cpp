// Consolidation behavior: hosts under the lower utilization threshold hand
// their VMs to minimum-increment targets and power down, drains are all or
// nothing, and queued sources never absorb each other's VMs.

#include <gtest/gtest.h>

#include <limits>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <greendc/policy.hpp>

#include "testutil.hpp"

using namespace greendc;

namespace {

PolicyParams params() { return PolicyParams{}; }  // tu_up 0.8, tu_low 0.2

}  // namespace

TEST(Consolidate, UnderloadedHostDrainsAndPowersDown) {
  auto a = gdt::host("a", 100, 200, 1.0);
  a.vms.push_back(gdt::vm("va", {{"s", 0.15}}));
  auto b = gdt::host("b", 100, 200, 1.0);
  b.vms.push_back(gdt::vm("vb", {{"s", 0.5}}));
  ClusterState c({a, b});

  PolicyDecision d = consolidate_vms(c, params());
  ASSERT_EQ(d.migrations.size(), 1u);
  EXPECT_EQ(d.migrations[0].vm_id, "va");
  EXPECT_EQ(d.migrations[0].target_host_id, "b");
  ASSERT_EQ(d.power_changes.size(), 1u);
  EXPECT_EQ(d.power_changes[0].host_id, "a");
  EXPECT_EQ(d.power_changes[0].mode, PowerMode::LowPower);

  apply_decision(c, d);
  EXPECT_NEAR(c.host("b").load_units(), 0.65, 1e-12);
  EXPECT_EQ(c.host("a").power_mode, PowerMode::LowPower);
}

TEST(Consolidate, NoHostBelowThresholdIsANoOp) {
  auto a = gdt::host("a", 100, 200, 1.0);
  a.vms.push_back(gdt::vm("va", {{"s", 0.3}}));
  auto b = gdt::host("b", 100, 200, 1.0);
  b.vms.push_back(gdt::vm("vb", {{"s", 0.2}}));  // exactly tu_low is not below it
  ClusterState c({a, b});
  EXPECT_TRUE(consolidate_vms(c, params()).empty());
}

TEST(Consolidate, InfeasibleVmRollsBackTheWholeDrain) {
  auto a = gdt::host("a", 100, 200, 1.0);
  a.vms.push_back(gdt::vm("va1", {{"s", 0.15}}));  // no host can take this
  a.vms.push_back(gdt::vm("va2", {{"s", 0.04}}));  // would fit, must not move alone
  auto b = gdt::host("b", 100, 200, 1.0);
  b.vms.push_back(gdt::vm("vb", {{"s", 0.75}}));
  ClusterState c({a, b});
  EXPECT_TRUE(consolidate_vms(c, params()).empty());
}

TEST(Consolidate, SourcesDoNotSwapIntoEachOther) {
  auto a = gdt::host("a", 100, 200, 1.0);
  a.vms.push_back(gdt::vm("va", {{"s", 0.10}}));
  auto b = gdt::host("b", 100, 200, 1.0);
  b.vms.push_back(gdt::vm("vb", {{"s", 0.15}}));
  ClusterState c({a, b});

  // a drains first but both peers are ruled out (b is still queued, a is
  // itself), so a stays; b then lands on a, which survives as last active.
  PolicyDecision d = consolidate_vms(c, params());
  ASSERT_EQ(d.migrations.size(), 1u);
  EXPECT_EQ(d.migrations[0].vm_id, "vb");
  EXPECT_EQ(d.migrations[0].target_host_id, "a");
  ASSERT_EQ(d.power_changes.size(), 1u);
  EXPECT_EQ(d.power_changes[0].host_id, "b");

  apply_decision(c, d);
  EXPECT_NEAR(c.host("a").load_units(), 0.25, 1e-12);
}

TEST(Consolidate, LastActiveHostStaysUp) {
  auto a = gdt::host("a", 100, 200, 1.0);
  a.vms.push_back(gdt::vm("va", {{"s", 0.05}}));
  ClusterState c({a, gdt::host("s", 60, 150, 1.0, PowerMode::LowPower)});
  EXPECT_TRUE(consolidate_vms(c, params()).empty());
}

TEST(Consolidate, EmptyHostPowersDownWithoutMigrations) {
  auto a = gdt::host("a", 100, 200, 1.0);  // idle host still burning watts
  auto b = gdt::host("b", 100, 200, 1.0);
  b.vms.push_back(gdt::vm("vb", {{"s", 0.5}}));
  ClusterState c({a, b});

  PolicyDecision d = consolidate_vms(c, params());
  EXPECT_TRUE(d.migrations.empty());
  ASSERT_EQ(d.power_changes.size(), 1u);
  EXPECT_EQ(d.power_changes[0].host_id, "a");
}

TEST(Consolidate, LargestVmsMoveFirst) {
  auto a = gdt::host("a", 100, 200, 1.0);
  a.vms.push_back(gdt::vm("va1", {{"s", 0.03}}));
  a.vms.push_back(gdt::vm("va2", {{"s", 0.08}}));
  a.vms.push_back(gdt::vm("va3", {{"s", 0.05}}));
  auto b = gdt::host("b", 100, 200, 1.0);
  b.vms.push_back(gdt::vm("vb", {{"s", 0.30}}));
  auto x = gdt::host("c", 100, 200, 1.0);
  x.vms.push_back(gdt::vm("vc", {{"s", 0.40}}));
  ClusterState c({a, b, x});

  PolicyDecision d = consolidate_vms(c, params());
  ASSERT_EQ(d.migrations.size(), 3u);
  EXPECT_EQ(d.migrations[0].vm_id, "va2");
  EXPECT_EQ(d.migrations[1].vm_id, "va3");
  EXPECT_EQ(d.migrations[2].vm_id, "va1");
  // Identical specs tie on power delta; the earlier host wins every round.
  for (const auto& m : d.migrations) EXPECT_EQ(m.target_host_id, "b");
}

TEST(MinDeltaTarget, PicksSmallestPowerIncrement) {
  auto x = gdt::host("x", 100, 200, 2.0);
  x.vms.push_back(gdt::vm("vx", {{"s", 1.0}}));
  auto y = gdt::host("y", 50, 250, 1.0);
  y.vms.push_back(gdt::vm("vy", {{"s", 0.2}}));
  auto z = gdt::host("z", 26, 106, 1.0);  // empty, so its idle jump counts
  ClusterState c({x, y, z});

  auto t = detail::min_delta_target(c, {}, 0.4, 0.8);
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(*t, "x");  // 20 W beats 80 W on y and 58 W on z
}

TEST(MinDeltaTarget, RespectsExclusionsAndCapacity) {
  auto x = gdt::host("x", 100, 200, 2.0);
  x.vms.push_back(gdt::vm("vx", {{"s", 1.0}}));
  auto y = gdt::host("y", 50, 250, 1.0);
  y.vms.push_back(gdt::vm("vy", {{"s", 0.3}}));
  ClusterState c({x, y});

  EXPECT_EQ(*detail::min_delta_target(c, {"x"}, 0.4, 0.8), "y");
  // 0.55 units only fit on x: y would land at 0.85 > 0.8.
  EXPECT_EQ(*detail::min_delta_target(c, {}, 0.55, 0.8), "x");
  EXPECT_FALSE(detail::min_delta_target(c, {"x", "y"}, 0.4, 0.8).has_value());
}

TEST(MinDeltaTarget, MatchesBruteForceOnRandomFleets) {
  std::mt19937_64 rng(20240818);
  std::uniform_real_distribution<double> idle_d(50.0, 150.0), span_d(50.0, 150.0),
      cap_d(1.0, 3.0), frac_d(0.0, 1.0), unit_d(0.05, 1.0);
  std::uniform_int_distribution<int> n_d(3, 7), coin(0, 3);

  for (int trial = 0; trial < 300; ++trial) {
    std::vector<HostState> hosts;
    std::set<std::string> excluded;
    int n = n_d(rng);
    for (int i = 0; i < n; ++i) {
      std::string id = "h" + std::to_string(i);
      bool low = i > 0 && coin(rng) == 0;
      double idle = idle_d(rng);
      auto h = gdt::host(id, idle, idle + span_d(rng), cap_d(rng),
                         low ? PowerMode::LowPower : PowerMode::Active);
      if (!low) {
        double load = frac_d(rng) * h.spec.cpu_capacity;
        if (load > 1e-9) h.vms.push_back(gdt::vm("v" + std::to_string(i), {{"s", load}}));
      }
      hosts.push_back(std::move(h));
      if (coin(rng) == 0) excluded.insert(id);
    }
    ClusterState c(std::move(hosts));
    double units = unit_d(rng);
    auto got = detail::min_delta_target(c, excluded, units, 0.8);

    // Reference pass: feasibility set and the cheapest increment within it.
    std::optional<std::string> any_feasible;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : c.hosts()) {
      if (h.power_mode != PowerMode::Active || excluded.count(h.spec.id)) continue;
      if (h.load_units() + units > 0.8 * h.spec.cpu_capacity + 1e-12) continue;
      double delta = detail::placement_delta(h, units);
      if (delta < best) best = delta;
      if (!any_feasible) any_feasible = h.spec.id;
    }

    ASSERT_EQ(got.has_value(), any_feasible.has_value()) << "trial " << trial;
    if (got) {
      const auto& h = c.host(*got);
      EXPECT_EQ(h.power_mode, PowerMode::Active);
      EXPECT_FALSE(excluded.count(*got)) << "trial " << trial;
      EXPECT_LE(h.load_units() + units, 0.8 * h.spec.cpu_capacity + 1e-12);
      EXPECT_LE(detail::placement_delta(h, units), best + 1e-9) << "trial " << trial;
    }
  }
}
