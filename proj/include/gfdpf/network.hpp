#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace gfdpf {

inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

enum class BusKind { PQ, PV, Slack };

inline const char* to_string(BusKind kind) {
  switch (kind) {
    case BusKind::PQ: return "PQ";
    case BusKind::PV: return "PV";
    case BusKind::Slack: return "Slack";
  }
  return "?";
}

/// Diagnostic raised while reading or validating a case.
class CaseError : public std::runtime_error {
 public:
  enum class Code {
    Syntax,
    UnknownBus,
    DuplicateBus,
    ZeroReactance,
    NoSlack,
    MissingGenerator,
    InvalidValue,
    Io,
  };

  CaseError(Code code, const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " +
                                          std::to_string(column) + ": " + what
                                    : what),
        code_(code),
        line_(line),
        column_(column) {}

  Code code() const noexcept { return code_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  Code code_;
  int line_;
  int column_;
};

// All electrical quantities are per-unit on the network base; angles in radians.
struct Bus {
  int id = 0;
  BusKind kind = BusKind::PQ;
  double pd = 0.0;
  double qd = 0.0;
  double gs = 0.0;
  double bs = 0.0;
  double vm0 = 1.0;
  double va0 = 0.0;
  double base_kv = 0.0;
  std::optional<int> area_hint;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double b_charging = 0.0;
  double tap = 1.0;
  double shift = 0.0;
  bool in_service = true;

  bool operator==(const Branch&) const = default;
};

struct Generator {
  int bus = 0;
  double pg = 0.0;
  double qg = 0.0;
  double vset = 1.0;
  double pmax = 0.0;
  bool in_service = true;

  bool operator==(const Generator&) const = default;
};

/// Immutable, validated per-unit network. Buses keep file order; dense index
/// i refers to buses()[i].
class Network {
 public:
  struct Options {
    // Area views are built before their slack is designated.
    bool require_slack = true;
  };

  Network() = default;

  Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
          std::vector<Generator> generators)
      : Network(base_mva, std::move(buses), std::move(branches), std::move(generators),
                Options{}) {}

  Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
          std::vector<Generator> generators, Options options)
      : base_mva_(base_mva),
        buses_(std::move(buses)),
        branches_(std::move(branches)),
        generators_(std::move(generators)) {
    if (!(base_mva_ > 0.0) || !std::isfinite(base_mva_))
      throw CaseError(CaseError::Code::InvalidValue, "base_mva must be positive");
    index_.reserve(buses_.size());
    bool any_slack = false;
    for (std::size_t i = 0; i < buses_.size(); ++i) {
      const Bus& b = buses_[i];
      if (!index_.emplace(b.id, i).second)
        throw CaseError(CaseError::Code::DuplicateBus,
                        "duplicate bus id " + std::to_string(b.id));
      if (!(b.vm0 > 0.0) || !std::isfinite(b.vm0))
        throw CaseError(CaseError::Code::InvalidValue,
                        "bus " + std::to_string(b.id) + ": vm0 must be positive");
      any_slack = any_slack || b.kind == BusKind::Slack;
    }
    if (options.require_slack && !any_slack)
      throw CaseError(CaseError::Code::NoSlack, "network has no slack bus");

    incident_ptr_.assign(buses_.size() + 1, 0);
    for (std::size_t k = 0; k < branches_.size(); ++k) {
      const Branch& br = branches_[k];
      const std::string tag = "branch " + std::to_string(k) + " (" + std::to_string(br.from) +
                              "-" + std::to_string(br.to) + ")";
      for (int end : {br.from, br.to})
        if (!index_.contains(end))
          throw CaseError(CaseError::Code::UnknownBus,
                          tag + " references unknown bus " + std::to_string(end));
      if (br.from == br.to)
        throw CaseError(CaseError::Code::InvalidValue, tag + " connects a bus to itself");
      if (br.x == 0.0)
        throw CaseError(CaseError::Code::ZeroReactance, tag + " has zero reactance");
      if (!(br.tap > 0.0))
        throw CaseError(CaseError::Code::InvalidValue, tag + " has non-positive tap ratio");
      from_idx_.push_back(index_.at(br.from));
      to_idx_.push_back(index_.at(br.to));
      if (br.in_service) {
        ++incident_ptr_[from_idx_.back() + 1];
        ++incident_ptr_[to_idx_.back() + 1];
      }
    }
    for (std::size_t i = 0; i < buses_.size(); ++i) incident_ptr_[i + 1] += incident_ptr_[i];
    incident_.resize(incident_ptr_.back());
    {
      std::vector<std::size_t> fill(incident_ptr_.begin(), incident_ptr_.end() - 1);
      for (std::size_t k = 0; k < branches_.size(); ++k) {
        const Branch& br = branches_[k];
        if (!br.in_service) continue;
        incident_[fill[from_idx_[k]]++] = k;
        incident_[fill[to_idx_[k]]++] = k;
      }
    }

    const std::size_t n = buses_.size();
    gen_p_.assign(n, 0.0);
    gen_q_.assign(n, 0.0);
    gen_capacity_.assign(n, 0.0);
    vset_.assign(n, 1.0);
    has_gen_.assign(n, false);
    gen_count_.assign(n, 0);
    for (const Generator& g : generators_) {
      auto it = index_.find(g.bus);
      if (it == index_.end())
        throw CaseError(CaseError::Code::UnknownBus,
                        "generator references unknown bus " + std::to_string(g.bus));
      if (!std::isfinite(g.pg) || !std::isfinite(g.qg))
        throw CaseError(CaseError::Code::InvalidValue,
                        "generator at bus " + std::to_string(g.bus) + " has non-finite output");
      if (!g.in_service) continue;
      const std::size_t i = it->second;
      gen_p_[i] += g.pg;
      gen_q_[i] += g.qg;
      gen_capacity_[i] += g.pmax;
      ++gen_count_[i];
      if (!has_gen_[i]) {
        vset_[i] = g.vset;
        has_gen_[i] = true;
      } else if (g.vset != vset_[i]) {
        warnings_.push_back("bus " + std::to_string(g.bus) +
                            ": conflicting generator voltage setpoints, keeping " +
                            std::to_string(vset_[i]));
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Bus& b = buses_[i];
      if (b.kind == BusKind::PQ) continue;
      if (!has_gen_[i])
        throw CaseError(CaseError::Code::MissingGenerator,
                        std::string(to_string(b.kind)) + " bus " + std::to_string(b.id) +
                            " has no in-service generator");
      if (!(vset_[i] > 0.0))
        throw CaseError(CaseError::Code::InvalidValue,
                        "bus " + std::to_string(b.id) + ": voltage setpoint must be positive");
    }
  }

  double base_mva() const noexcept { return base_mva_; }
  std::size_t n_bus() const noexcept { return buses_.size(); }
  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const std::vector<Generator>& generators() const noexcept { return generators_; }
  const Bus& bus(std::size_t i) const { return buses_[i]; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  std::optional<std::size_t> find(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(int id) const {
    auto it = index_.find(id);
    if (it == index_.end())
      throw CaseError(CaseError::Code::UnknownBus, "unknown bus " + std::to_string(id));
    return it->second;
  }

  /// In-service branches touching bus i, ascending branch index.
  std::span<const std::size_t> incident(std::size_t i) const {
    return {incident_.data() + incident_ptr_[i], incident_ptr_[i + 1] - incident_ptr_[i]};
  }

  std::size_t from_index(std::size_t k) const { return from_idx_[k]; }
  std::size_t to_index(std::size_t k) const { return to_idx_[k]; }
  std::size_t other_end(std::size_t k, std::size_t i) const {
    return from_idx_[k] == i ? to_idx_[k] : from_idx_[k];
  }

  // Per-bus generation aggregated over in-service generators.
  double gen_p(std::size_t i) const { return gen_p_[i]; }
  double gen_q(std::size_t i) const { return gen_q_[i]; }
  double gen_capacity(std::size_t i) const { return gen_capacity_[i]; }
  double vset(std::size_t i) const { return vset_[i]; }
  bool has_generator(std::size_t i) const { return has_gen_[i]; }
  std::size_t count_generators_at(std::size_t i) const { return gen_count_[i]; }

  std::size_t count(BusKind kind) const {
    return static_cast<std::size_t>(std::count_if(
        buses_.begin(), buses_.end(), [kind](const Bus& b) { return b.kind == kind; }));
  }

  bool operator==(const Network& o) const {
    return base_mva_ == o.base_mva_ && buses_ == o.buses_ && branches_ == o.branches_ &&
           generators_ == o.generators_;
  }

 private:
  double base_mva_ = 100.0;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Generator> generators_;
  std::unordered_map<int, std::size_t> index_;
  std::vector<std::size_t> incident_ptr_{0};
  std::vector<std::size_t> incident_;
  std::vector<std::size_t> from_idx_, to_idx_;
  std::vector<double> gen_p_, gen_q_, gen_capacity_, vset_;
  std::vector<bool> has_gen_;
  std::vector<std::size_t> gen_count_;
  std::vector<std::string> warnings_;
};

struct Component {
  std::vector<int> bus_ids;
  std::size_t slack_count = 0;
  bool has_slack() const { return slack_count > 0; }
};

/// Connected components over in-service branches, ordered by their first bus.
inline std::vector<Component> validate_topology(const Network& net) {
  const std::size_t n = net.n_bus();
  std::vector<int> comp(n, -1);
  std::vector<Component> out;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const int c = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<std::size_t> members;
    comp[s] = c;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      members.push_back(i);
      for (std::size_t k : net.incident(i)) {
        const std::size_t j = net.other_end(k, i);
        if (comp[j] < 0) {
          comp[j] = c;
          stack.push_back(j);
        }
      }
    }
    std::sort(members.begin(), members.end());
    for (std::size_t i : members) {
      out.back().bus_ids.push_back(net.bus(i).id);
      if (net.bus(i).kind == BusKind::Slack) ++out.back().slack_count;
    }
  }
  return out;
}

}  // namespace gfdpf
