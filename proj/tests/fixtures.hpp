#pragma once

#include <string>
#include <vector>

#include "gfdpf/gfdpf.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace gfdpf;

inline Network case118() { return load_case(oracle::data("case118.m")); }
inline Network case14() { return load_case(oracle::data("case14.m")); }

/// Slack bus 1, PQ bus 2 carrying (pd, qd), one branch.
inline Network two_bus(Branch br, double pd = 0.0, double qd = 0.0) {
  br.from = 1;
  br.to = 2;
  std::vector<Bus> buses(2);
  buses[0].id = 1;
  buses[0].kind = BusKind::Slack;
  buses[1].id = 2;
  buses[1].pd = pd;
  buses[1].qd = qd;
  return Network(100.0, buses, {br}, {Generator{1, 0.0, 0.0, 1.0, 1.0, true}});
}

inline Branch line(double r, double x, double b = 0.0) {
  Branch br;
  br.r = r;
  br.x = x;
  br.b_charging = b;
  return br;
}

/// Slack 1 - PQ 2 - PQ 3, both branches (r, x).
inline Network three_bus_chain(double r, double x, double pd) {
  std::vector<Bus> buses(3);
  for (int i = 0; i < 3; ++i) buses[i].id = i + 1;
  buses[0].kind = BusKind::Slack;
  buses[1].pd = buses[2].pd = pd;
  Branch a = line(r, x), b = line(r, x);
  a.from = 1;
  a.to = 2;
  b.from = 2;
  b.to = 3;
  return Network(100.0, buses, {a, b}, {Generator{1, 0.0, 0.0, 1.0, 1.0, true}});
}

/// No load, no generation output, no shunts or charging.
inline Network zero_load(int n = 4) {
  std::vector<Bus> buses(n);
  std::vector<Branch> branches;
  for (int i = 0; i < n; ++i) buses[i].id = i + 1;
  buses[0].kind = BusKind::Slack;
  for (int i = 1; i < n; ++i) {
    Branch br = line(0.01, 0.1);
    br.from = i;
    br.to = i + 1;
    branches.push_back(br);
  }
  return Network(100.0, buses, branches, {Generator{1, 0.0, 0.0, 1.0, 1.0, true}});
}

inline std::string two_bus_matpower(const std::string& branch_row = "1 2 0 0.1 0 0 0 0 0 0 1 -360 360") {
  return "function mpc = two\n"
         "mpc.baseMVA = 100;\n"
         "mpc.bus = [\n"
         " 1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;\n"
         " 2 1 50 10 0 0 1 1 0 230 1 1.1 0.9;\n"
         "];\n"
         "mpc.gen = [\n"
         " 1 0 0 100 -100 1 100 1 100 0;\n"
         "];\n"
         "mpc.branch = [\n " +
         branch_row +
         ";\n"
         "];\n";
}

}  // namespace fixture
