#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gfdpf/fdpf.hpp"
#include "gfdpf/network.hpp"

namespace gfdpf {

class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// External bus id -> area id.
struct AreaMap {
  std::map<int, int> area_of_bus;
};

/// Plain text, one "bus area" pair per line; '#' starts a comment.
inline AreaMap parse_area_map(std::string_view text) {
  AreaMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    long bus = 0, area = 0;
    std::string extra;
    if (!(fields >> bus)) {
      fields.clear();
      std::string rest;
      if (fields >> rest) throw PartitionError("area map line " + std::to_string(lineno) + ": expected 'bus area'");
      continue;
    }
    if (!(fields >> area) || (fields >> extra))
      throw PartitionError("area map line " + std::to_string(lineno) + ": expected 'bus area'");
    if (!map.area_of_bus.emplace(static_cast<int>(bus), static_cast<int>(area)).second)
      throw PartitionError("area map line " + std::to_string(lineno) + ": bus " + std::to_string(bus) +
                           " assigned twice");
  }
  return map;
}

inline AreaMap load_area_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PartitionError("cannot open area map '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_area_map(ss.str());
}

inline void write_area_map(std::ostream& os, const AreaMap& map) {
  for (const auto& [bus, area] : map.area_of_bus) os << bus << ' ' << area << '\n';
}

/// Area view: the area's buses, intra-area branches and generators. Its slack
/// is designated later (see make_area_network).
struct Area {
  int id = 0;
  Network network;
};

struct AreaPartition {
  std::map<int, int> area_of;
  std::vector<std::size_t> inter_area_branches;  // indices into the full network
  std::vector<Area> areas;                       // ascending area id

  /// Buses at either end of an in-service inter-area branch.
  std::set<int> boundary_buses(const Network& net) const {
    std::set<int> out;
    for (std::size_t k : inter_area_branches) {
      const Branch& br = net.branches()[k];
      if (!br.in_service) continue;
      out.insert(br.from);
      out.insert(br.to);
    }
    return out;
  }
};

inline AreaPartition split_areas(const Network& net, const AreaMap& map) {
  AreaPartition part;
  for (const auto& [bus, area] : map.area_of_bus)
    if (!net.find(bus)) throw PartitionError("area map names unknown bus " + std::to_string(bus));
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    const int id = net.bus(i).id;
    auto it = map.area_of_bus.find(id);
    if (it == map.area_of_bus.end()) throw PartitionError("bus " + std::to_string(id) + " unassigned");
    part.area_of[id] = it->second;
    members[it->second].push_back(i);
  }

  std::map<int, std::vector<Branch>> area_branches;
  for (std::size_t k = 0; k < net.branches().size(); ++k) {
    const Branch& br = net.branches()[k];
    const int af = part.area_of.at(br.from), at = part.area_of.at(br.to);
    if (af != at)
      part.inter_area_branches.push_back(k);
    else
      area_branches[af].push_back(br);
  }
  std::map<int, std::vector<Generator>> area_gens;
  for (const Generator& g : net.generators()) area_gens[part.area_of.at(g.bus)].push_back(g);

  for (auto& [area, idx] : members) {
    std::vector<Bus> buses;
    buses.reserve(idx.size());
    for (std::size_t i : idx) buses.push_back(net.bus(i));
    Network sub(net.base_mva(), std::move(buses), std::move(area_branches[area]), std::move(area_gens[area]),
                Network::Options{.require_slack = false});
    const auto comps = validate_topology(sub);
    if (comps.size() != 1)
      throw PartitionError("area " + std::to_string(area) + " is not internally connected (bus " +
                           std::to_string(comps[1].bus_ids.front()) + " is cut off from bus " +
                           std::to_string(comps[0].bus_ids.front()) + ")");
    part.areas.push_back({area, std::move(sub)});
  }
  return part;
}

/// Reference-state flows of every removed branch, booked as extra load at
/// each end: the from bus carries (P_ft, Q_ft), the to bus (P_tf, Q_tf).
inline BoundaryInjectionSet boundary_injections(const Network& net, const AreaPartition& part,
                                                const PowerFlowState& reference) {
  if (reference.vm.size() != net.n_bus() || reference.va.size() != net.n_bus())
    throw std::invalid_argument("boundary_injections: reference state does not cover the network");
  BoundaryInjectionSet set;
  for (std::size_t k : part.inter_area_branches) {
    const Branch& br = net.branches()[k];
    const BranchFlow f = branch_flow(br, reference, net.from_index(k), net.to_index(k));
    set.provenance.push_back({k, BoundaryContribution::End::From, br.from, f.p_from, f.q_from});
    set.provenance.push_back({k, BoundaryContribution::End::To, br.to, f.p_to, f.q_to});
  }
  for (const BoundaryContribution& c : set.provenance) {
    Injection& inj = set.per_bus[c.bus];
    inj.p += c.p;
    inj.q += c.q;
  }
  return set;
}

struct AreaSlack {
  int area = 0;
  int bus = 0;
  double va = 0.0;  // pinned angle, radians, from the reference state
  double vm = 1.0;  // pinned magnitude from the reference state
};

/// One slack per area: the original slack where the area holds one, otherwise
/// the generator bus with the largest in-service capacity (ties: lowest id).
inline std::vector<AreaSlack> select_area_slacks(const AreaPartition& part, const Network& net,
                                                 const PowerFlowState& reference) {
  std::vector<AreaSlack> out;
  for (const Area& area : part.areas) {
    const Network& sub = area.network;
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < sub.n_bus() && !pick; ++i)
      if (sub.bus(i).kind == BusKind::Slack) pick = i;
    if (!pick)
      for (std::size_t i = 0; i < sub.n_bus(); ++i) {
        if (!sub.has_generator(i)) continue;
        if (!pick || sub.gen_capacity(i) > sub.gen_capacity(*pick) ||
            (sub.gen_capacity(i) == sub.gen_capacity(*pick) && sub.bus(i).id < sub.bus(*pick).id))
          pick = i;
      }
    if (!pick)
      throw PartitionError("area " + std::to_string(area.id) +
                           " has no in-service generator bus to act as slack; revise the area map");
    const int bus = sub.bus(*pick).id;
    const std::size_t g = net.index_of(bus);
    out.push_back({area.id, bus, reference.va.at(g), reference.vm.at(g)});
  }
  return out;
}

/// The solvable area network: the chosen bus becomes Slack with its angle and
/// magnitude pinned to the reference values.
inline Network make_area_network(const Area& area, const AreaSlack& slack) {
  const Network& sub = area.network;
  std::vector<Bus> buses = sub.buses();
  for (Bus& b : buses)
    if (b.id == slack.bus) {
      b.kind = BusKind::Slack;
      b.va0 = slack.va;
    }
  std::vector<Generator> gens = sub.generators();
  for (Generator& g : gens)
    if (g.bus == slack.bus) g.vset = slack.vm;
  return Network(sub.base_mva(), std::move(buses), sub.branches(), std::move(gens));
}

}  // namespace gfdpf
