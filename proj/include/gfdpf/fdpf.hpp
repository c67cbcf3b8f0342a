#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gfdpf/admittance.hpp"
#include "gfdpf/cholesky.hpp"
#include "gfdpf/network.hpp"
#include "gfdpf/thread_pool.hpp"

namespace gfdpf {

enum class StartMode { Flat, NonFlat };

struct SolverOptions {
  double tolerance = 1e-3;  // p.u. on raw ΔP, ΔQ
  int max_iterations = 30;
  StartMode start = StartMode::NonFlat;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());

  void validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  }
};

struct PowerFlowState {
  std::vector<double> vm;
  std::vector<double> va;  // radians

  bool operator==(const PowerFlowState&) const = default;
};

/// Extra P/Q load (p.u.) at a bus standing in for a removed branch end.
struct Injection {
  double p = 0.0;
  double q = 0.0;
  bool operator==(const Injection&) const = default;
};

struct BoundaryContribution {
  enum class End { From, To };
  std::size_t branch = 0;  // index into the full network's branch list
  End end = End::From;
  int bus = 0;
  double p = 0.0;
  double q = 0.0;
  bool operator==(const BoundaryContribution&) const = default;
};

struct BoundaryInjectionSet {
  std::map<int, Injection> per_bus;  // keyed by external bus id
  std::vector<BoundaryContribution> provenance;

  Injection at(int bus) const {
    auto it = per_bus.find(bus);
    return it == per_bus.end() ? Injection{} : it->second;
  }
  bool operator==(const BoundaryInjectionSet&) const = default;
};

struct Mismatch {
  std::vector<double> dp_over_v;  // over non-slack buses, dense order
  std::vector<double> dq_over_v;  // over PQ buses, dense order
  double max_p = 0.0;
  double max_q = 0.0;
};

struct BranchFlow {
  double p_from = 0.0, q_from = 0.0, p_to = 0.0, q_to = 0.0;
  bool operator==(const BranchFlow&) const = default;
};

enum class HalfStep { Initial, P, Q };

struct MismatchRecord {
  int iteration = 0;
  HalfStep half = HalfStep::Initial;
  double max_p = 0.0;
  double max_q = 0.0;
  bool operator==(const MismatchRecord&) const = default;
};

struct Timing {
  double build_ms = 0.0;
  double factorize_ms = 0.0;
  double iterate_ms = 0.0;
  double total_ms = 0.0;
};

struct Solution {
  std::vector<int> bus_ids;
  PowerFlowState state;
  bool converged = false;
  int iterations = 0;
  std::vector<MismatchRecord> max_mismatch_history;
  std::vector<BranchFlow> branch_flows;
  Timing timing;

  /// Everything except timing.
  bool same_result(const Solution& o) const {
    return bus_ids == o.bus_ids && state == o.state && converged == o.converged &&
           iterations == o.iterations && max_mismatch_history == o.max_mismatch_history &&
           branch_flows == o.branch_flows;
  }
};

/// Complex injection S_i = V_i·conj(Σ_j Y_ij·V_j) evaluated bus by bus.
class MismatchEvaluator {
 public:
  MismatchEvaluator(const Network& net, const SparseComplexMatrix& ybus,
                    const BoundaryInjectionSet* injections = nullptr, ThreadPool* pool = nullptr)
      : rows_(ybus.transpose()), classes_(classify_buses(net)), pool_(pool) {
    const std::size_t n = net.n_bus();
    if (static_cast<std::size_t>(ybus.size()) != n)
      throw std::invalid_argument("mismatch: Ybus dimension does not match network");
    p_spec_.resize(n);
    q_spec_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Bus& b = net.bus(i);
      const Injection extra = injections ? injections->at(b.id) : Injection{};
      p_spec_[i] = net.gen_p(i) - b.pd - extra.p;
      q_spec_[i] = net.gen_q(i) - b.qd - extra.q;
    }
  }

  const BusClasses& classes() const { return classes_; }
  const std::vector<double>& p_spec() const { return p_spec_; }
  const std::vector<double>& q_spec() const { return q_spec_; }

  /// Computed complex injections at every bus.
  std::vector<Complex> injections(const PowerFlowState& st) const {
    const std::size_t n = p_spec_.size();
    if (st.vm.size() != n || st.va.size() != n)
      throw std::invalid_argument("mismatch: state dimension does not match network");
    std::vector<Complex> v(n), s(n);
    for_each_bus(n, [&](std::size_t i) { v[i] = std::polar(st.vm[i], st.va[i]); });
    const auto& cp = rows_.col_ptr();
    const auto& ri = rows_.row_idx();
    const auto& yv = rows_.values();
    for_each_bus(n, [&](std::size_t i) {
      Complex current{};
      for (int p = cp[i]; p < cp[i + 1]; ++p) current += yv[p] * v[ri[p]];
      s[i] = v[i] * std::conj(current);
    });
    return s;
  }

  Mismatch evaluate(const PowerFlowState& st) const {
    const std::vector<Complex> s = injections(st);
    Mismatch m;
    m.dp_over_v.resize(classes_.non_slack.size());
    m.dq_over_v.resize(classes_.pq.size());
    for (std::size_t r = 0; r < classes_.non_slack.size(); ++r) {
      const int i = classes_.non_slack[r];
      const double dp = p_spec_[i] - s[i].real();
      m.max_p = std::max(m.max_p, std::abs(dp));
      if (std::isnan(dp)) m.max_p = dp;
      m.dp_over_v[r] = dp / st.vm[i];
    }
    for (std::size_t r = 0; r < classes_.pq.size(); ++r) {
      const int i = classes_.pq[r];
      const double dq = q_spec_[i] - s[i].imag();
      m.max_q = std::max(m.max_q, std::abs(dq));
      if (std::isnan(dq)) m.max_q = dq;
      m.dq_over_v[r] = dq / st.vm[i];
    }
    return m;
  }

 private:
  template <typename F>
  void for_each_bus(std::size_t n, F&& fn) const {
    if (pool_ && pool_->size() > 1)
      pool_->parallel_for(0, n, 512, fn);
    else
      for (std::size_t i = 0; i < n; ++i) fn(i);
  }

  SparseComplexMatrix rows_;  // Yᵀ in CSC, i.e. rows of Ybus
  BusClasses classes_;
  std::vector<double> p_spec_, q_spec_;
  ThreadPool* pool_;
};

inline Mismatch compute_mismatch(const Network& net, const SparseComplexMatrix& ybus, const PowerFlowState& state,
                                 const BoundaryInjectionSet* injections = nullptr, ThreadPool* pool = nullptr) {
  return MismatchEvaluator(net, ybus, injections, pool).evaluate(state);
}

inline BranchFlow branch_flow(const Branch& br, const PowerFlowState& st, std::size_t f, std::size_t t) {
  if (!br.in_service) return {};
  const BranchAdmittance y = branch_admittance(br);
  const Complex vf = std::polar(st.vm[f], st.va[f]);
  const Complex vt = std::polar(st.vm[t], st.va[t]);
  const Complex sf = vf * std::conj(y.yff * vf + y.yft * vt);
  const Complex stt = vt * std::conj(y.ytf * vf + y.ytt * vt);
  return {sf.real(), sf.imag(), stt.real(), stt.imag()};
}

/// π-model flows at both ends of every branch; zero for out-of-service branches.
inline std::vector<BranchFlow> branch_flows(const Network& net, const PowerFlowState& st, ThreadPool* pool = nullptr) {
  std::vector<BranchFlow> out(net.branches().size());
  auto one = [&](std::size_t k) {
    out[k] = branch_flow(net.branches()[k], st, net.from_index(k), net.to_index(k));
  };
  if (pool && pool->size() > 1)
    pool->parallel_for(0, out.size(), 512, one);
  else
    for (std::size_t k = 0; k < out.size(); ++k) one(k);
  return out;
}

/// Starting point: PV/slack magnitudes at their setpoints, slack angles at
/// their reference; PQ buses from the case (non-flat) or 1.0∠slack (flat).
inline PowerFlowState initial_state(const Network& net, StartMode start) {
  const std::size_t n = net.n_bus();
  PowerFlowState st{std::vector<double>(n), std::vector<double>(n)};
  std::vector<double> reference_angle(n, 0.0);
  if (start == StartMode::Flat)
    for (const Component& c : validate_topology(net)) {
      double angle = 0.0;
      for (int id : c.bus_ids)
        if (net.bus(net.index_of(id)).kind == BusKind::Slack) {
          angle = net.bus(net.index_of(id)).va0;
          break;
        }
      for (int id : c.bus_ids) reference_angle[net.index_of(id)] = angle;
    }
  for (std::size_t i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    const bool flat = start == StartMode::Flat;
    st.vm[i] = b.kind == BusKind::PQ ? (flat ? 1.0 : b.vm0) : net.vset(i);
    st.va[i] = (b.kind == BusKind::Slack || !flat) ? b.va0 : reference_angle[i];
  }
  return st;
}

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline void require_slack_per_component(const Network& net) {
  for (const Component& c : validate_topology(net))
    if (!c.has_slack())
      throw std::invalid_argument("island containing bus " + std::to_string(c.bus_ids.front()) +
                                  " has no slack bus");
}

}  // namespace detail

/// Fast decoupled power flow: alternate B'·Δθ = ΔP/|V| and B''·Δ|V| = ΔQ/|V|
/// with both matrices factorized once, recomputing the mismatch after every
/// half-iteration.
inline Solution fdpf_solve(const Network& net, const SolverOptions& options,
                           const BoundaryInjectionSet* injections = nullptr, ThreadPool* pool = nullptr) {
  options.validate();
  std::unique_ptr<ThreadPool> own_pool;
  if (!pool) {
    own_pool = std::make_unique<ThreadPool>(options.threads);
    pool = own_pool.get();
  }
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  detail::require_slack_per_component(net);

  Solution sol;
  sol.bus_ids.reserve(net.n_bus());
  for (const Bus& b : net.buses()) sol.bus_ids.push_back(b.id);

  auto t = clock::now();
  const SparseComplexMatrix ybus = build_ybus(net, pool);
  const FdpfMatrices mats = build_fdpf_matrices(net, pool);
  const MismatchEvaluator mismatch(net, ybus, injections, pool);
  sol.timing.build_ms = detail::elapsed_ms(t);

  t = clock::now();
  std::optional<CholeskyFactor> bp, bpp;
  if (mats.b_prime.size() > 0) bp = factorize(mats.b_prime, pool);
  if (mats.b_double_prime.size() > 0) bpp = factorize(mats.b_double_prime, pool);
  sol.timing.factorize_ms = detail::elapsed_ms(t);

  t = clock::now();
  PowerFlowState& st = sol.state;
  st = initial_state(net, options.start);
  const double tol = options.tolerance;
  auto done = [tol](const Mismatch& m) { return m.max_p < tol && m.max_q < tol; };
  auto finite = [](const Mismatch& m) { return std::isfinite(m.max_p) && std::isfinite(m.max_q); };

  Mismatch m = mismatch.evaluate(st);
  sol.max_mismatch_history.push_back({0, HalfStep::Initial, m.max_p, m.max_q});
  sol.converged = done(m);
  for (int it = 1; it <= options.max_iterations && !sol.converged && finite(m); ++it) {
    sol.iterations = it;
    if (bp) {
      const std::vector<double> dva = solve(*bp, m.dp_over_v, pool);
      for (std::size_t r = 0; r < dva.size(); ++r) st.va[mats.bp_bus[r]] += dva[r];
    }
    m = mismatch.evaluate(st);
    sol.max_mismatch_history.push_back({it, HalfStep::P, m.max_p, m.max_q});
    if ((sol.converged = done(m)) || !finite(m)) break;

    if (bpp) {
      const std::vector<double> dvm = solve(*bpp, m.dq_over_v, pool);
      for (std::size_t r = 0; r < dvm.size(); ++r) st.vm[mats.bpp_bus[r]] += dvm[r];
    }
    m = mismatch.evaluate(st);
    sol.max_mismatch_history.push_back({it, HalfStep::Q, m.max_p, m.max_q});
    sol.converged = done(m);
  }
  sol.timing.iterate_ms = detail::elapsed_ms(t);

  sol.branch_flows = branch_flows(net, st, pool);
  sol.timing.total_ms = detail::elapsed_ms(t_start);
  return sol;
}

}  // namespace gfdpf
