#pragma once

// Builders for the small synthetic fixtures the tests run on.

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include <greendc/cluster.hpp>

namespace gdt {

inline greendc::HostState host(std::string id, double idle, double full, double cap,
                               greendc::PowerMode mode = greendc::PowerMode::Active) {
  greendc::HostState h;
  h.spec.id = std::move(id);
  h.spec.machine_class = "test";
  h.spec.cores = 4;
  h.spec.idle_watts = idle;
  h.spec.full_watts = full;
  h.spec.cpu_capacity = cap;
  h.power_mode = mode;
  return h;
}

struct Ms {
  std::string id;
  double util = 0.0;
  bool optional = false;
  bool active = true;
};

inline greendc::VmState vm(std::string id, std::vector<Ms> services) {
  greendc::VmState v;
  v.id = std::move(id);
  for (auto& s : services)
    v.microservices.push_back({s.id, s.util,
                               s.optional ? greendc::Optionality::Optional
                                          : greendc::Optionality::Mandatory,
                               s.active});
  return v;
}

// Writes under the gtest temp dir; callers pick collision-free names.
inline std::string write_file(const std::string& name, const std::string& content) {
  std::filesystem::path p = std::filesystem::path(::testing::TempDir()) / name;
  std::ofstream out(p);
  out << content;
  out.close();
  return p.string();
}

}  // namespace gdt
