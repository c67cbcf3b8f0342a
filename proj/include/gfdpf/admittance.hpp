#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gfdpf/network.hpp"
#include "gfdpf/sparse.hpp"
#include "gfdpf/thread_pool.hpp"

namespace gfdpf {

using Complex = std::complex<double>;

/// Two-port π-model admittances of a branch; the tap (with phase shift) sits
/// on the from side.
struct BranchAdmittance {
  Complex yff, yft, ytf, ytt;
};

inline BranchAdmittance branch_admittance(const Branch& br, bool honor_shift = true) {
  if (br.r == 0.0 && br.x == 0.0)
    throw std::invalid_argument("branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                                " has zero impedance");
  const Complex ys = 1.0 / Complex(br.r, br.x);
  const Complex ytt = ys + Complex(0.0, br.b_charging / 2.0);
  const Complex tap = honor_shift ? std::polar(br.tap, br.shift) : Complex(br.tap, 0.0);
  return {ytt / (br.tap * br.tap), -ys / std::conj(tap), -ys / tap, ytt};
}

using SparseRow = std::vector<std::pair<int, Complex>>;
using SparseRealRow = std::vector<std::pair<int, double>>;

namespace detail {

template <typename T>
void sort_and_merge(std::vector<std::pair<int, T>>& row) {
  std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t out = 0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (out > 0 && row[out - 1].first == row[k].first)
      row[out - 1].second += row[k].second;
    else
      row[out++] = row[k];
  }
  row.resize(out);
}

template <typename T, typename RowFn>
SparseMatrix<T> assemble_rows(int n, RowFn&& row_of, ThreadPool* pool) {
  std::vector<std::vector<std::pair<int, T>>> rows(static_cast<std::size_t>(n));
  auto build = [&](std::size_t i) { rows[i] = row_of(i); };
  if (pool)
    pool->parallel_for(0, rows.size(), 256, build);
  else
    for (std::size_t i = 0; i < rows.size(); ++i) build(i);
  // Rows of A are the columns of Aᵀ.
  return SparseMatrix<T>::from_columns(n, rows).transpose();
}

}  // namespace detail

/// Row i of Ybus from bus i, its in-service incident branches and its shunt only.
inline SparseRow ybus_row(const Network& net, std::size_t i, bool honor_shift = true) {
  const Bus& bus = net.bus(i);
  SparseRow row;
  Complex diag(bus.gs, bus.bs);
  for (std::size_t k : net.incident(i)) {
    const Branch& br = net.branches()[k];
    const BranchAdmittance y = branch_admittance(br, honor_shift);
    if (net.from_index(k) == i) {
      diag += y.yff;
      row.emplace_back(static_cast<int>(net.to_index(k)), y.yft);
    } else {
      diag += y.ytt;
      row.emplace_back(static_cast<int>(net.from_index(k)), y.ytf);
    }
  }
  row.emplace_back(static_cast<int>(i), diag);
  detail::sort_and_merge(row);
  return row;
}

/// Complex bus admittance matrix; out-of-service branches excluded.
inline SparseComplexMatrix build_ybus(const Network& net, ThreadPool* pool = nullptr) {
  return detail::assemble_rows<Complex>(
      static_cast<int>(net.n_bus()), [&](std::size_t i) { return ybus_row(net, i); }, pool);
}

/// Constant coefficient matrices of the fast decoupled iteration (XB scheme).
struct FdpfMatrices {
  SparseRealMatrix b_prime;         // non-slack buses
  SparseRealMatrix b_double_prime;  // PQ buses
  std::vector<int> bp_bus;          // B' row -> dense bus index
  std::vector<int> bpp_bus;         // B'' row -> dense bus index
  std::vector<int> bp_row_of_bus;   // dense bus index -> B' row or -1
  std::vector<int> bpp_row_of_bus;  // dense bus index -> B'' row or -1

  bool trivial() const { return bp_bus.empty(); }
};

struct BusClasses {
  std::vector<int> non_slack;
  std::vector<int> pq;
  std::vector<int> row_non_slack;
  std::vector<int> row_pq;
};

inline BusClasses classify_buses(const Network& net) {
  BusClasses c;
  c.row_non_slack.assign(net.n_bus(), -1);
  c.row_pq.assign(net.n_bus(), -1);
  for (std::size_t i = 0; i < net.n_bus(); ++i) {
    const BusKind kind = net.bus(i).kind;
    if (kind != BusKind::Slack) {
      c.row_non_slack[i] = static_cast<int>(c.non_slack.size());
      c.non_slack.push_back(static_cast<int>(i));
    }
    if (kind == BusKind::PQ) {
      c.row_pq[i] = static_cast<int>(c.pq.size());
      c.pq.push_back(static_cast<int>(i));
    }
  }
  return c;
}

/// B' row for bus i (full bus indexing): series reactance only.
inline SparseRealRow b_prime_row(const Network& net, std::size_t i) {
  SparseRealRow row;
  double diag = 0.0;
  for (std::size_t k : net.incident(i)) {
    const double b = 1.0 / net.branches()[k].x;
    diag += b;
    row.emplace_back(static_cast<int>(net.other_end(k, i)), -b);
  }
  row.emplace_back(static_cast<int>(i), diag);
  detail::sort_and_merge(row);
  return row;
}

/// B'' row for bus i (full bus indexing): -Im(Ybus) with phase shifts dropped.
inline SparseRealRow b_double_prime_row(const Network& net, std::size_t i) {
  SparseRealRow row;
  for (const auto& [j, y] : ybus_row(net, i, /*honor_shift=*/false)) row.emplace_back(j, -y.imag());
  return row;
}

namespace detail {

inline SparseRealRow restrict_row(const SparseRealRow& full, const std::vector<int>& row_of) {
  SparseRealRow out;
  for (const auto& [j, v] : full)
    if (row_of[j] >= 0) out.emplace_back(row_of[j], v);
  return out;
}

}  // namespace detail

inline FdpfMatrices build_fdpf_matrices(const Network& net, ThreadPool* pool = nullptr) {
  const BusClasses c = classify_buses(net);
  FdpfMatrices m;
  m.bp_bus = c.non_slack;
  m.bpp_bus = c.pq;
  m.bp_row_of_bus = c.row_non_slack;
  m.bpp_row_of_bus = c.row_pq;
  m.b_prime = detail::assemble_rows<double>(
      static_cast<int>(m.bp_bus.size()),
      [&](std::size_t r) { return detail::restrict_row(b_prime_row(net, m.bp_bus[r]), m.bp_row_of_bus); },
      pool);
  m.b_double_prime = detail::assemble_rows<double>(
      static_cast<int>(m.bpp_bus.size()),
      [&](std::size_t r) {
        return detail::restrict_row(b_double_prime_row(net, m.bpp_bus[r]), m.bpp_row_of_bus);
      },
      pool);
  return m;
}

}  // namespace gfdpf
