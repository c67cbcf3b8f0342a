#pragma once

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gfdpf/distributed.hpp"
#include "gfdpf/fdpf.hpp"
#include "gfdpf/network.hpp"
#include "gfdpf/partition.hpp"

namespace gfdpf {

using nlohmann::json;

inline const char* to_string(HalfStep h) {
  switch (h) {
    case HalfStep::Initial: return "initial";
    case HalfStep::P: return "P";
    case HalfStep::Q: return "Q";
  }
  return "?";
}

inline HalfStep half_step_from(const std::string& s) {
  if (s == "P") return HalfStep::P;
  if (s == "Q") return HalfStep::Q;
  return HalfStep::Initial;
}

// Machine-readable reports. Units at this boundary: degrees, MW/MVAr,
// milliseconds; "va_rad" is kept alongside so reports read back exactly.

inline json timing_json(const Timing& t) {
  return {{"build", t.build_ms}, {"factorize", t.factorize_ms}, {"iterate", t.iterate_ms}, {"total", t.total_ms}};
}

inline json solution_json(const Network& net, const Solution& s) {
  const double base = net.base_mva();
  json j;
  j["converged"] = s.converged;
  j["iterations"] = s.iterations;
  json& buses = j["buses"] = json::array();
  for (std::size_t i = 0; i < s.bus_ids.size(); ++i)
    buses.push_back({{"id", s.bus_ids[i]},
                     {"vm", s.state.vm[i]},
                     {"va_deg", s.state.va[i] * kRadToDeg},
                     {"va_rad", s.state.va[i]}});
  json& flows = j["branches"] = json::array();
  for (std::size_t k = 0; k < s.branch_flows.size(); ++k) {
    const BranchFlow& f = s.branch_flows[k];
    const Branch& br = net.branches()[k];
    flows.push_back({{"index", k},
                     {"from", br.from},
                     {"to", br.to},
                     {"p_from_mw", f.p_from * base},
                     {"q_from_mvar", f.q_from * base},
                     {"p_to_mw", f.p_to * base},
                     {"q_to_mvar", f.q_to * base}});
  }
  json& hist = j["history"] = json::array();
  for (const MismatchRecord& r : s.max_mismatch_history)
    hist.push_back({{"iteration", r.iteration}, {"half", to_string(r.half)}, {"max_p", r.max_p}, {"max_q", r.max_q}});
  j["timing_ms"] = timing_json(s.timing);
  return j;
}

/// Reads back a solution report (state, flows, history; timings included).
inline Solution solution_from_json(const json& j, double base_mva = 100.0) {
  Solution s;
  s.converged = j.at("converged").get<bool>();
  s.iterations = j.at("iterations").get<int>();
  for (const json& b : j.at("buses")) {
    s.bus_ids.push_back(b.at("id").get<int>());
    s.state.vm.push_back(b.at("vm").get<double>());
    s.state.va.push_back(b.contains("va_rad") ? b.at("va_rad").get<double>()
                                              : b.at("va_deg").get<double>() * kDegToRad);
  }
  if (j.contains("branches"))
    for (const json& f : j.at("branches"))
      s.branch_flows.push_back({f.at("p_from_mw").get<double>() / base_mva, f.at("q_from_mvar").get<double>() / base_mva,
                                f.at("p_to_mw").get<double>() / base_mva, f.at("q_to_mvar").get<double>() / base_mva});
  if (j.contains("history"))
    for (const json& r : j.at("history"))
      s.max_mismatch_history.push_back({r.at("iteration").get<int>(), half_step_from(r.at("half").get<std::string>()),
                                        r.at("max_p").get<double>(), r.at("max_q").get<double>()});
  if (j.contains("timing_ms")) {
    const json& t = j.at("timing_ms");
    s.timing = {t.value("build", 0.0), t.value("factorize", 0.0), t.value("iterate", 0.0), t.value("total", 0.0)};
  }
  return s;
}

/// The solution object inside any report this library writes.
inline Solution solution_from_report(const json& report) {
  const double base = report.value("base_mva", 100.0);
  if (report.contains("merged")) return solution_from_json(report.at("merged"), base);
  if (report.contains("solution")) return solution_from_json(report.at("solution"), base);
  return solution_from_json(report, base);
}

inline json diff_json(const DiffReport& d) {
  auto list = [](const std::vector<BusDiff>& v) {
    json a = json::array();
    for (const BusDiff& b : v) a.push_back({{"bus", b.bus}, {"angle_diff_deg", b.angle_diff_deg}, {"vm_diff_pu", b.vm_diff_pu}});
    return a;
  };
  return {{"max_angle_diff_deg", d.max_angle_diff_deg},
          {"max_vm_diff_pu", d.max_vm_diff_pu},
          {"worst_angle", list(d.worst_angle)},
          {"worst_vm", list(d.worst_vm)}};
}

inline json injections_json(const Network& net, const BoundaryInjectionSet& inj) {
  const double base = net.base_mva();
  json j;
  json& per_bus = j["per_bus"] = json::array();
  for (const auto& [bus, v] : inj.per_bus) per_bus.push_back({{"bus", bus}, {"p_mw", v.p * base}, {"q_mvar", v.q * base}});
  json& prov = j["contributions"] = json::array();
  for (const BoundaryContribution& c : inj.provenance) {
    const Branch& br = net.branches()[c.branch];
    prov.push_back({{"branch", c.branch},
                    {"from", br.from},
                    {"to", br.to},
                    {"end", c.end == BoundaryContribution::End::From ? "from" : "to"},
                    {"bus", c.bus},
                    {"p_mw", c.p * base},
                    {"q_mvar", c.q * base}});
  }
  return j;
}

inline json distributed_json(const Network& net, const DistributedSolution& d) {
  json j;
  j["base_mva"] = net.base_mva();
  j["converged"] = d.merged.converged;
  j["failed_areas"] = d.failed_areas;
  j["thread_count"] = d.thread_count;
  j["wall_time_ms"] = d.wall_time_ms;
  j["inter_area_branches"] = d.inter_area_branches.size();
  j["boundary_buses"] = d.boundary_bus_count;
  j["boundary_bus_ratio"] = net.n_bus() ? double(d.boundary_bus_count) / double(net.n_bus()) : 0.0;
  json& areas = j["areas"] = json::array();
  for (const AreaRun& a : d.per_area)
    areas.push_back({{"area", a.area},
                     {"slack_bus", a.slack_bus},
                     {"buses", a.solution.bus_ids.size()},
                     {"converged", a.solution.converged},
                     {"iterations", a.solution.iterations},
                     {"timing_ms", timing_json(a.solution.timing)}});
  j["injections"] = injections_json(net, d.injections);
  j["merged"] = solution_json(net, d.merged);
  return j;
}

/// Drops every timing field so reports from different runs compare byte-for-byte.
inline json strip_timing(json j) {
  if (j.is_object()) {
    for (const char* key : {"timing_ms", "wall_time_ms", "thread_count"}) j.erase(key);
    for (auto& [key, value] : j.items()) value = strip_timing(value);
  } else if (j.is_array()) {
    for (auto& value : j) value = strip_timing(value);
  }
  return j;
}

inline json benchmark_json(const BenchmarkTable& t) {
  json j;
  j["thread_counts"] = t.thread_counts;
  json& rows = j["rows"] = json::array();
  for (const BenchmarkRow& r : t.rows) rows.push_back({{"method", r.method}, {"iterations", r.iterations}, {"median_ms", r.median_ms}});
  return j;
}

// Human-readable renderings.

inline void write_solution_text(std::ostream& os, const Network& net, const Solution& s) {
  const double base = net.base_mva();
  os << "converged: " << (s.converged ? "yes" : "no") << "   iterations: " << s.iterations << '\n';
  os << std::fixed;
  os << "timing (ms): build " << std::setprecision(3) << s.timing.build_ms << ", factorize " << s.timing.factorize_ms
     << ", iterate " << s.timing.iterate_ms << ", total " << s.timing.total_ms << "\n\n";
  os << std::setw(8) << "bus" << std::setw(12) << "vm (pu)" << std::setw(14) << "va (deg)" << '\n';
  for (std::size_t i = 0; i < s.bus_ids.size(); ++i)
    os << std::setw(8) << s.bus_ids[i] << std::setw(12) << std::setprecision(5) << s.state.vm[i] << std::setw(14)
       << std::setprecision(4) << s.state.va[i] * kRadToDeg << '\n';
  os << '\n'
     << std::setw(6) << "branch" << std::setw(7) << "from" << std::setw(7) << "to" << std::setw(12) << "P_f (MW)"
     << std::setw(12) << "Q_f (MVAr)" << std::setw(12) << "P_t (MW)" << std::setw(12) << "Q_t (MVAr)" << '\n';
  os << std::setprecision(2);
  for (std::size_t k = 0; k < s.branch_flows.size(); ++k) {
    const BranchFlow& f = s.branch_flows[k];
    const Branch& br = net.branches()[k];
    os << std::setw(6) << k << std::setw(7) << br.from << std::setw(7) << br.to << std::setw(12) << f.p_from * base
       << std::setw(12) << f.q_from * base << std::setw(12) << f.p_to * base << std::setw(12) << f.q_to * base << '\n';
  }
  os << "\nmismatch history (p.u.):\n";
  os << std::scientific << std::setprecision(3);
  for (const MismatchRecord& r : s.max_mismatch_history)
    os << "  " << std::setw(3) << r.iteration << ' ' << std::setw(7) << to_string(r.half) << "  max|dP| " << r.max_p
       << "  max|dQ| " << r.max_q << '\n';
  os << std::defaultfloat;
}

inline void write_diff_text(std::ostream& os, const DiffReport& d) {
  os << std::setprecision(6) << "max angle difference: " << d.max_angle_diff_deg
     << " deg\nmax magnitude difference: " << d.max_vm_diff_pu << " p.u.\n";
  os << "worst angle offenders:";
  for (const BusDiff& b : d.worst_angle) os << ' ' << b.bus << '(' << b.angle_diff_deg << ')';
  os << "\nworst magnitude offenders:";
  for (const BusDiff& b : d.worst_vm) os << ' ' << b.bus << '(' << b.vm_diff_pu << ')';
  os << '\n';
}

inline void write_distributed_text(std::ostream& os, const Network& net, const DistributedSolution& d) {
  os << "distributed solve: " << d.per_area.size() << " areas, " << d.inter_area_branches.size()
     << " inter-area branches, " << d.boundary_bus_count << " boundary buses (" << std::fixed << std::setprecision(1)
     << (net.n_bus() ? 100.0 * double(d.boundary_bus_count) / double(net.n_bus()) : 0.0) << "%)\n";
  os << "converged: " << (d.merged.converged ? "yes" : "no") << "   wall time " << std::setprecision(3) << d.wall_time_ms
     << " ms on " << d.thread_count << " thread(s)\n";
  os << std::setw(6) << "area" << std::setw(8) << "buses" << std::setw(8) << "slack" << std::setw(7) << "iter"
     << std::setw(11) << "converged" << '\n';
  for (const AreaRun& a : d.per_area)
    os << std::setw(6) << a.area << std::setw(8) << a.solution.bus_ids.size() << std::setw(8) << a.slack_bus
       << std::setw(7) << a.solution.iterations << std::setw(11) << (a.solution.converged ? "yes" : "no") << '\n';
  os << std::defaultfloat;
}

inline void write_injections_text(std::ostream& os, const Network& net, const BoundaryInjectionSet& inj) {
  const double base = net.base_mva();
  os << std::fixed << std::setprecision(3);
  os << std::setw(7) << "branch" << std::setw(7) << "from" << std::setw(7) << "to" << std::setw(6) << "end"
     << std::setw(8) << "bus" << std::setw(12) << "P (MW)" << std::setw(12) << "Q (MVAr)" << '\n';
  for (const BoundaryContribution& c : inj.provenance) {
    const Branch& br = net.branches()[c.branch];
    os << std::setw(7) << c.branch << std::setw(7) << br.from << std::setw(7) << br.to << std::setw(6)
       << (c.end == BoundaryContribution::End::From ? "from" : "to") << std::setw(8) << c.bus << std::setw(12)
       << c.p * base << std::setw(12) << c.q * base << '\n';
  }
  os << std::defaultfloat;
}

/// Table with one column per thread count, plus a delimited copy.
inline void write_benchmark_text(std::ostream& os, const BenchmarkTable& t) {
  os << std::left << std::setw(20) << "Method" << std::setw(22) << "Iterations";
  for (std::size_t th : t.thread_counts) os << std::right << std::setw(11) << (std::to_string(th) + " thr");
  os << '\n';
  for (const BenchmarkRow& r : t.rows) {
    std::string its;
    for (std::size_t k = 0; k < r.iterations.size(); ++k) its += (k ? "/" : "") + std::to_string(r.iterations[k]);
    os << std::left << std::setw(20) << r.method << std::setw(22) << its << std::right << std::fixed
       << std::setprecision(2);
    for (double ms : r.median_ms) os << std::setw(11) << ms;
    os << '\n' << std::defaultfloat;
  }
}

inline void write_benchmark_csv(std::ostream& os, const BenchmarkTable& t) {
  os << "method,iterations";
  for (std::size_t th : t.thread_counts) os << ",threads_" << th << "_ms";
  os << '\n';
  for (const BenchmarkRow& r : t.rows) {
    os << r.method << ',';
    for (std::size_t k = 0; k < r.iterations.size(); ++k) os << (k ? "/" : "") << r.iterations[k];
    for (double ms : r.median_ms) os << ',' << ms;
    os << '\n';
  }
}

}  // namespace gfdpf
