#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "gfdpf/fdpf.hpp"
#include "gfdpf/partition.hpp"
#include "gfdpf/thread_pool.hpp"

namespace gfdpf {

struct AreaRun {
  int area = 0;
  int slack_bus = 0;
  Solution solution;
};

struct DistributedSolution {
  Solution merged;
  std::vector<AreaRun> per_area;  // ascending area id
  std::vector<int> failed_areas;
  std::vector<std::size_t> inter_area_branches;
  std::size_t boundary_bus_count = 0;
  BoundaryInjectionSet injections;
  double wall_time_ms = 0.0;
  std::size_t thread_count = 1;
};

/// Reference state with Gaussian noise on vm (p.u.) and va (rad), emulating
/// state-estimator error. Slack buses are left untouched.
inline PowerFlowState perturb_state(const Network& net, PowerFlowState st, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return st;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    const double dv = noise(rng), da = noise(rng);
    if (net.bus(i).kind == BusKind::Slack) continue;
    if (net.bus(i).kind == BusKind::PQ) st.vm[i] += dv;
    st.va[i] += da;
  }
  return st;
}

/// Splits the network, books removed branches as boundary loads, solves every
/// area as an independent task, then merges. Areas never exchange data once
/// their injections are fixed.
inline DistributedSolution run_distributed(const Network& net, const AreaMap& map, const PowerFlowState& reference,
                                           const SolverOptions& options, ThreadPool* pool = nullptr) {
  options.validate();
  std::unique_ptr<ThreadPool> own_pool;
  if (!pool) {
    own_pool = std::make_unique<ThreadPool>(options.threads);
    pool = own_pool.get();
  }
  const auto t0 = std::chrono::steady_clock::now();

  const AreaPartition part = split_areas(net, map);
  DistributedSolution out;
  out.injections = boundary_injections(net, part, reference);
  out.inter_area_branches = part.inter_area_branches;
  out.boundary_bus_count = part.boundary_buses(net).size();
  out.thread_count = pool->size();
  const std::vector<AreaSlack> slacks = select_area_slacks(part, net, reference);

  std::vector<Network> problems;
  problems.reserve(part.areas.size());
  for (std::size_t a = 0; a < part.areas.size(); ++a) problems.push_back(make_area_network(part.areas[a], slacks[a]));

  out.per_area.resize(part.areas.size());
  pool->parallel_for(0, problems.size(), 1, [&](std::size_t a) {
    out.per_area[a] = {part.areas[a].id, slacks[a].bus, fdpf_solve(problems[a], options, &out.injections, pool)};
  });

  Solution& merged = out.merged;
  merged.bus_ids.reserve(net.n_bus());
  for (const Bus& b : net.buses()) merged.bus_ids.push_back(b.id);
  merged.state.vm.assign(net.n_bus(), 0.0);
  merged.state.va.assign(net.n_bus(), 0.0);
  merged.converged = true;
  for (std::size_t a = 0; a < problems.size(); ++a) {
    const Solution& s = out.per_area[a].solution;
    for (std::size_t i = 0; i < s.bus_ids.size(); ++i) {
      const std::size_t g = net.index_of(s.bus_ids[i]);
      merged.state.vm[g] = s.state.vm[i];
      merged.state.va[g] = s.state.va[i];
    }
    merged.iterations = std::max(merged.iterations, s.iterations);
    if (!s.converged) {
      merged.converged = false;
      out.failed_areas.push_back(out.per_area[a].area);
    }
    merged.timing.build_ms = std::max(merged.timing.build_ms, s.timing.build_ms);
    merged.timing.factorize_ms = std::max(merged.timing.factorize_ms, s.timing.factorize_ms);
    merged.timing.iterate_ms = std::max(merged.timing.iterate_ms, s.timing.iterate_ms);
  }
  if (problems.size() == 1) merged.max_mismatch_history = out.per_area.front().solution.max_mismatch_history;
  merged.branch_flows = branch_flows(net, merged.state, pool);
  out.wall_time_ms = detail::elapsed_ms(t0);
  merged.timing.total_ms = out.wall_time_ms;
  return out;
}

struct BusDiff {
  int bus = 0;
  double angle_diff_deg = 0.0;
  double vm_diff_pu = 0.0;
};

struct DiffReport {
  double max_angle_diff_deg = 0.0;
  double max_vm_diff_pu = 0.0;
  std::vector<BusDiff> worst_angle;  // descending angle difference
  std::vector<BusDiff> worst_vm;     // descending magnitude difference
};

inline double wrap_degrees(double d) {
  d = std::fmod(d, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

inline DiffReport compare_solutions(const Solution& a, const Solution& b, std::size_t top_k = 10) {
  if (a.bus_ids.size() != b.bus_ids.size())
    throw std::invalid_argument("compare_solutions: solutions cover different bus sets");
  std::unordered_map<int, std::size_t> where;
  for (std::size_t i = 0; i < b.bus_ids.size(); ++i) where.emplace(b.bus_ids[i], i);
  std::vector<BusDiff> diffs;
  diffs.reserve(a.bus_ids.size());
  DiffReport r;
  for (std::size_t i = 0; i < a.bus_ids.size(); ++i) {
    auto it = where.find(a.bus_ids[i]);
    if (it == where.end())
      throw std::invalid_argument("compare_solutions: bus " + std::to_string(a.bus_ids[i]) +
                                  " missing from second solution");
    const std::size_t j = it->second;
    BusDiff d{a.bus_ids[i], std::abs(wrap_degrees((a.state.va[i] - b.state.va[j]) * kRadToDeg)),
              std::abs(a.state.vm[i] - b.state.vm[j])};
    r.max_angle_diff_deg = std::max(r.max_angle_diff_deg, d.angle_diff_deg);
    r.max_vm_diff_pu = std::max(r.max_vm_diff_pu, d.vm_diff_pu);
    diffs.push_back(d);
  }
  auto top = [&](auto key) {
    std::vector<BusDiff> v = diffs;
    std::stable_sort(v.begin(), v.end(), [&](const BusDiff& x, const BusDiff& y) { return key(x) > key(y); });
    v.resize(std::min(top_k, v.size()));
    return v;
  };
  r.worst_angle = top([](const BusDiff& d) { return d.angle_diff_deg; });
  r.worst_vm = top([](const BusDiff& d) { return d.vm_diff_pu; });
  return r;
}

struct BenchmarkRow {
  std::string method;
  std::vector<int> iterations;       // one entry, or one per area
  std::vector<double> median_ms;     // per thread count
};

struct BenchmarkTable {
  std::vector<std::size_t> thread_counts;
  std::vector<BenchmarkRow> rows;  // monolithic, distributed
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n == 0 ? 0.0 : (n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]));
}

/// Median-of-`repeats` wall time after one warm-up run, for the monolithic
/// solve and the distributed pipeline at every thread count. The distributed
/// reference state is the monolithic solution.
inline BenchmarkTable benchmark(const Network& net, const AreaMap& map, const std::vector<std::size_t>& thread_counts,
                                SolverOptions options = {}, int repeats = 5) {
  if (repeats < 1) throw std::invalid_argument("benchmark: repeats must be at least 1");
  BenchmarkTable table;
  table.thread_counts = thread_counts;
  BenchmarkRow mono{"Monolithic FDPF", {}, {}}, dist{"Distributed FDPF", {}, {}};
  options.threads = 1;
  const Solution reference = fdpf_solve(net, options);
  mono.iterations = {reference.iterations};
  for (std::size_t threads : thread_counts) {
    options.threads = threads;
    ThreadPool pool(threads);
    std::vector<double> tm, td;
    for (int r = -1; r < repeats; ++r) {
      auto t = std::chrono::steady_clock::now();
      const Solution s = fdpf_solve(net, options, nullptr, &pool);
      const double mono_ms = detail::elapsed_ms(t);
      t = std::chrono::steady_clock::now();
      const DistributedSolution d = run_distributed(net, map, reference.state, options, &pool);
      const double dist_ms = detail::elapsed_ms(t);
      if (r < 0) {
        dist.iterations.clear();
        for (const AreaRun& a : d.per_area) dist.iterations.push_back(a.solution.iterations);
        continue;
      }
      tm.push_back(mono_ms);
      td.push_back(dist_ms);
    }
    mono.median_ms.push_back(median(tm));
    dist.median_ms.push_back(median(td));
  }
  table.rows = {mono, dist};
  return table;
}

}  // namespace gfdpf
