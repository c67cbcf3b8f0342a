#pragma once

// Dense reference implementations used only by tests. Each one rebuilds its
// result from first principles rather than calling the solver's own kernels.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gfdpf/gfdpf.hpp"

namespace oracle {

using gfdpf::BusKind;
using gfdpf::Network;
using cd = std::complex<double>;

inline std::string data(const std::string& name) { return std::string(GFDPF_TEST_DATA) + "/" + name; }

/// Ybus = Cfᵀ·Yf + Ctᵀ·Yt + diag(Ysh), branch by branch.
inline Eigen::MatrixXcd dense_ybus(const Network& net, bool honor_shift = true) {
  const Eigen::Index n = static_cast<Eigen::Index>(net.n_bus());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (const gfdpf::Branch& br : net.branches()) {
    if (!br.in_service) continue;
    const Eigen::Index f = net.index_of(br.from), t = net.index_of(br.to);
    const cd ys = 1.0 / cd(br.r, br.x);
    const cd bc(0.0, br.b_charging / 2.0);
    const cd a = std::polar(br.tap, honor_shift ? br.shift : 0.0);
    y(f, f) += (ys + bc) / (a * std::conj(a));
    y(f, t) += -ys / std::conj(a);
    y(t, f) += -ys / a;
    y(t, t) += ys + bc;
  }
  for (Eigen::Index i = 0; i < n; ++i) y(i, i) += cd(net.bus(i).gs, net.bus(i).bs);
  return y;
}

inline std::vector<std::size_t> buses_where(const Network& net, const std::function<bool(BusKind)>& keep) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < net.n_bus(); ++i)
    if (keep(net.bus(i).kind)) out.push_back(i);
  return out;
}

inline std::vector<std::size_t> non_slack(const Network& net) {
  return buses_where(net, [](BusKind k) { return k != BusKind::Slack; });
}
inline std::vector<std::size_t> pq(const Network& net) {
  return buses_where(net, [](BusKind k) { return k == BusKind::PQ; });
}

/// B' of the XB scheme: Laplacian of 1/x over in-service branches, restricted.
inline Eigen::MatrixXd dense_b_prime(const Network& net) {
  const Eigen::Index n = static_cast<Eigen::Index>(net.n_bus());
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n, n);
  for (const gfdpf::Branch& br : net.branches()) {
    if (!br.in_service) continue;
    const Eigen::Index f = net.index_of(br.from), t = net.index_of(br.to);
    const double b = 1.0 / br.x;
    full(f, f) += b;
    full(t, t) += b;
    full(f, t) -= b;
    full(t, f) -= b;
  }
  const auto idx = non_slack(net);
  Eigen::MatrixXd out(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = full(idx[r], idx[c]);
  return out;
}

inline Eigen::MatrixXd dense_b_double_prime(const Network& net) {
  const Eigen::MatrixXcd y = dense_ybus(net, false);
  const auto idx = pq(net);
  Eigen::MatrixXd out(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = -y(idx[r], idx[c]).imag();
  return out;
}

template <typename T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> to_dense(const gfdpf::SparseMatrix<T>& m) {
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> d =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(m.size(), m.size());
  for (int j = 0; j < m.size(); ++j)
    for (int p = m.col_ptr()[j]; p < m.col_ptr()[j + 1]; ++p) d(m.row_idx()[p], j) = m.values()[p];
  return d;
}

inline Eigen::VectorXcd voltages(const gfdpf::PowerFlowState& st) {
  Eigen::VectorXcd v(st.vm.size());
  for (std::size_t i = 0; i < st.vm.size(); ++i) v(i) = std::polar(st.vm[i], st.va[i]);
  return v;
}

/// S = diag(V)·conj(Y·V).
inline Eigen::VectorXcd injections(const Eigen::MatrixXcd& y, const gfdpf::PowerFlowState& st) {
  const Eigen::VectorXcd v = voltages(st);
  return v.cwiseProduct((y * v).conjugate());
}

/// Scheduled net injection per bus: generation minus load minus extra load.
inline Eigen::VectorXcd scheduled(const Network& net, const gfdpf::BoundaryInjectionSet* extra = nullptr) {
  Eigen::VectorXcd s(net.n_bus());
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    double p = -net.bus(i).pd, q = -net.bus(i).qd;
    for (const gfdpf::Generator& g : net.generators())
      if (g.in_service && g.bus == net.bus(i).id) {
        p += g.pg;
        q += g.qg;
      }
    if (extra) {
      p -= extra->at(net.bus(i).id).p;
      q -= extra->at(net.bus(i).id).q;
    }
    s(i) = cd(p, q);
  }
  return s;
}

struct DenseMismatch {
  std::vector<double> dp;  // over non-slack buses
  std::vector<double> dq;  // over PQ buses
  double max_p = 0.0;
  double max_q = 0.0;
};

inline DenseMismatch mismatch(const Network& net, const gfdpf::PowerFlowState& st,
                              const gfdpf::BoundaryInjectionSet* extra = nullptr) {
  const Eigen::VectorXcd s = injections(dense_ybus(net), st);
  const Eigen::VectorXcd spec = scheduled(net, extra);
  DenseMismatch m;
  for (std::size_t i : non_slack(net)) {
    m.dp.push_back(spec(i).real() - s(i).real());
    m.max_p = std::max(m.max_p, std::abs(m.dp.back()));
  }
  for (std::size_t i : pq(net)) {
    m.dq.push_back(spec(i).imag() - s(i).imag());
    m.max_q = std::max(m.max_q, std::abs(m.dq.back()));
  }
  return m;
}

struct NewtonResult {
  gfdpf::PowerFlowState state;
  bool converged = false;
  int iterations = 0;
};

/// Full Newton-Raphson in polar coordinates with the exact dense Jacobian.
inline NewtonResult newton_raphson(const Network& net, double tol = 1e-10, int max_iter = 50,
                                   const gfdpf::BoundaryInjectionSet* extra = nullptr) {
  const Eigen::MatrixXcd y = dense_ybus(net);
  const Eigen::VectorXcd spec = scheduled(net, extra);
  const auto ang = non_slack(net), mag = pq(net);
  const std::size_t n = net.n_bus(), na = ang.size(), nm = mag.size();

  NewtonResult res;
  gfdpf::PowerFlowState& st = res.state;
  st.vm.resize(n);
  st.va.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const gfdpf::Bus& b = net.bus(i);
    st.va[i] = b.va0;
    st.vm[i] = b.kind == BusKind::PQ ? b.vm0 : net.vset(i);
  }

  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::VectorXcd v = voltages(st);
    const Eigen::VectorXcd i_bus = y * v;
    const Eigen::VectorXcd s = v.cwiseProduct(i_bus.conjugate());
    Eigen::VectorXd f(na + nm);
    for (std::size_t r = 0; r < na; ++r) f(r) = s(ang[r]).real() - spec(ang[r]).real();
    for (std::size_t r = 0; r < nm; ++r) f(na + r) = s(mag[r]).imag() - spec(mag[r]).imag();
    if (f.size() == 0 || f.lpNorm<Eigen::Infinity>() < tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    if (it == max_iter) break;

    const Eigen::VectorXcd vnorm = v.cwiseQuotient(v.cwiseAbs().cast<cd>());
    const Eigen::MatrixXcd dv = v.asDiagonal();
    const Eigen::MatrixXcd ds_dvm =
        dv * (y * vnorm.asDiagonal()).conjugate() + Eigen::MatrixXcd(i_bus.conjugate().asDiagonal()) * vnorm.asDiagonal();
    const Eigen::MatrixXcd ds_dva =
        cd(0.0, 1.0) * dv * (Eigen::MatrixXcd(i_bus.asDiagonal()) - y * dv).conjugate();

    Eigen::MatrixXd jac(na + nm, na + nm);
    for (std::size_t r = 0; r < na; ++r) {
      for (std::size_t c = 0; c < na; ++c) jac(r, c) = ds_dva(ang[r], ang[c]).real();
      for (std::size_t c = 0; c < nm; ++c) jac(r, na + c) = ds_dvm(ang[r], mag[c]).real();
    }
    for (std::size_t r = 0; r < nm; ++r) {
      for (std::size_t c = 0; c < na; ++c) jac(na + r, c) = ds_dva(mag[r], ang[c]).imag();
      for (std::size_t c = 0; c < nm; ++c) jac(na + r, na + c) = ds_dvm(mag[r], mag[c]).imag();
    }
    const Eigen::VectorXd dx = jac.fullPivLu().solve(-f);
    for (std::size_t r = 0; r < na; ++r) st.va[ang[r]] += dx(r);
    for (std::size_t r = 0; r < nm; ++r) st.vm[mag[r]] += dx(na + r);
    res.iterations = it + 1;
  }
  return res;
}

/// |Σ gen − Σ load − Σ branch losses − Σ shunt consumption| for P and Q, where
/// slack (and PV reactive) generation is whatever the solved state implies.
/// Boundary injections, when given, count as load.
struct Balance {
  double p = 0.0;
  double q = 0.0;
};

inline Balance power_balance(const Network& net, const gfdpf::PowerFlowState& st,
                             const std::vector<gfdpf::BranchFlow>& flows,
                             const gfdpf::BoundaryInjectionSet* extra = nullptr) {
  const Eigen::VectorXcd s = injections(dense_ybus(net), st);
  const Eigen::VectorXcd spec = scheduled(net, extra);
  double gen_p = 0.0, gen_q = 0.0, load_p = 0.0, load_q = 0.0;
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    const gfdpf::Bus& b = net.bus(i);
    const gfdpf::Injection x = extra ? extra->at(b.id) : gfdpf::Injection{};
    load_p += b.pd + x.p;
    load_q += b.qd + x.q;
    const double p_net = b.kind == BusKind::Slack ? s(i).real() : spec(i).real();
    const double q_net = b.kind == BusKind::PQ ? spec(i).imag() : s(i).imag();
    gen_p += p_net + b.pd + x.p;
    gen_q += q_net + b.qd + x.q;
  }
  double loss_p = 0.0, loss_q = 0.0;
  for (std::size_t k = 0; k < flows.size(); ++k) {
    if (!net.branches()[k].in_service) continue;
    loss_p += flows[k].p_from + flows[k].p_to;
    loss_q += flows[k].q_from + flows[k].q_to;
  }
  double sh_p = 0.0, sh_q = 0.0;
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    const double v2 = st.vm[i] * st.vm[i];
    sh_p += net.bus(i).gs * v2;
    sh_q += -net.bus(i).bs * v2;
  }
  return {std::abs(gen_p - load_p - loss_p - sh_p), std::abs(gen_q - load_q - loss_q - sh_q)};
}

/// S_f = V_f·conj(I_f) of the π model written out directly.
inline gfdpf::BranchFlow branch_flow(const gfdpf::Branch& br, cd vf, cd vt) {
  const cd ys = 1.0 / cd(br.r, br.x);
  const cd bc(0.0, br.b_charging / 2.0);
  const cd a = std::polar(br.tap, br.shift);
  const cd i_f = (ys + bc) / std::norm(a) * vf - ys / std::conj(a) * vt;
  const cd i_t = -ys / a * vf + (ys + bc) * vt;
  const cd sf = vf * std::conj(i_f), st = vt * std::conj(i_t);
  return {sf.real(), sf.imag(), st.real(), st.imag()};
}

/// Mismatch from bus-by-bus summation of π-model branch-end flows plus shunt
/// consumption; O(branches), so it scales to grids too large for dense Ybus.
inline DenseMismatch mismatch_by_flows(const Network& net, const gfdpf::PowerFlowState& st,
                                       const gfdpf::BoundaryInjectionSet* extra = nullptr) {
  std::vector<cd> s(net.n_bus());
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    const double v2 = st.vm[i] * st.vm[i];
    s[i] = cd(net.bus(i).gs * v2, -net.bus(i).bs * v2);
  }
  for (const gfdpf::Branch& br : net.branches()) {
    if (!br.in_service) continue;
    const std::size_t f = net.index_of(br.from), t = net.index_of(br.to);
    const auto fl = branch_flow(br, std::polar(st.vm[f], st.va[f]), std::polar(st.vm[t], st.va[t]));
    s[f] += cd(fl.p_from, fl.q_from);
    s[t] += cd(fl.p_to, fl.q_to);
  }
  std::vector<cd> spec(net.n_bus());
  for (std::size_t i = 0; i < net.n_bus(); ++i) spec[i] = cd(-net.bus(i).pd, -net.bus(i).qd);
  for (const gfdpf::Generator& g : net.generators())
    if (g.in_service) spec[net.index_of(g.bus)] += cd(g.pg, g.qg);
  if (extra)
    for (const auto& [bus, x] : extra->per_bus)
      if (auto i = net.find(bus)) spec[*i] -= cd(x.p, x.q);
  DenseMismatch m;
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    const BusKind k = net.bus(i).kind;
    if (k != BusKind::Slack) {
      m.dp.push_back(spec[i].real() - s[i].real());
      m.max_p = std::max(m.max_p, std::abs(m.dp.back()));
    }
    if (k == BusKind::PQ) {
      m.dq.push_back(spec[i].imag() - s[i].imag());
      m.max_q = std::max(m.max_q, std::abs(m.dq.back()));
    }
  }
  return m;
}

// ---------------------------------------------------------------- sparse

using BoolMatrix = std::vector<std::vector<bool>>;

inline BoolMatrix to_bool(const gfdpf::SparsityPattern& p) {
  BoolMatrix m(p.n, std::vector<bool>(p.n, false));
  for (int j = 0; j < p.n; ++j)
    for (int k = p.col_ptr[j]; k < p.col_ptr[j + 1]; ++k) m[p.row_idx[k]][j] = true;
  return m;
}

struct DenseSymbolic {
  BoolMatrix lower;        // pattern of L in permuted order, diagonal included
  std::vector<int> etree;  // -1 at roots
  std::size_t fill = 0;
};

/// Symbolic Gaussian elimination on a dense boolean copy of PAPᵀ.
inline DenseSymbolic dense_symbolic(const gfdpf::SparsityPattern& p, const std::vector<int>& perm) {
  const int n = p.n;
  const BoolMatrix a = to_bool(p);
  BoolMatrix m(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = a[perm[i]][perm[j]] || i == j;
  std::size_t original = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) original += m[i][j];
  for (int k = 0; k < n; ++k)
    for (int i = k + 1; i < n; ++i)
      if (m[i][k])
        for (int j = k + 1; j < n; ++j)
          if (m[j][k]) m[i][j] = m[j][i] = true;
  DenseSymbolic out;
  out.lower.assign(n, std::vector<bool>(n, false));
  out.etree.assign(n, -1);
  std::size_t total = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i)
      if (m[i][j]) {
        out.lower[i][j] = true;
        if (i > j) {
          ++total;
          if (out.etree[j] == -1) out.etree[j] = i;
        }
      }
  out.fill = total - original;
  return out;
}

inline std::size_t fill_count(const gfdpf::SparsityPattern& p, const std::vector<int>& perm) {
  return dense_symbolic(p, perm).fill;
}

/// Longest path from j down to a leaf, by plain recursion over children.
inline int depth_to_leaf(const std::vector<int>& parent, int j) {
  int best = -1;
  for (std::size_t c = 0; c < parent.size(); ++c)
    if (parent[c] == j) best = std::max(best, depth_to_leaf(parent, static_cast<int>(c)));
  return best + 1;
}

inline gfdpf::SparseRealMatrix from_dense(const Eigen::MatrixXd& d) {
  std::vector<gfdpf::Triplet<double>> t;
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      if (d(i, j) != 0.0) t.push_back({static_cast<int>(i), static_cast<int>(j), d(i, j)});
  return gfdpf::SparseRealMatrix::from_triplets(static_cast<int>(d.rows()), std::move(t));
}

/// Sparse SPD matrix MᵀM + n·I with M holding `per_row` random entries per row.
inline Eigen::MatrixXd random_spd(int n, int per_row, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> col(0, n - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < per_row; ++k) m(i, col(rng)) = val(rng);
  Eigen::MatrixXd a = m.transpose() * m;
  a.diagonal().array() += n;
  return a;
}

/// Random symmetric pattern with a full diagonal.
inline gfdpf::SparsityPattern random_pattern(int n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(density);
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (edge(rng)) d(i, j) = d(j, i) = 1.0;
  return gfdpf::SparsityPattern::of(from_dense(d));
}

inline Eigen::MatrixXd permuted(const Eigen::MatrixXd& a, const std::vector<int>& perm) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = a(perm[i], perm[j]);
  return out;
}

}  // namespace oracle
