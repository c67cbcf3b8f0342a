#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfdpf/ordering.hpp"
#include "gfdpf/sparse.hpp"
#include "gfdpf/thread_pool.hpp"

namespace gfdpf {

/// Columns grouped by elimination-tree height: every column sits one level
/// above the highest of its children, leaves at level 0.
struct EliminationLevels {
  std::vector<int> level_of;
  std::vector<int> level_ptr{0};
  std::vector<int> columns;

  std::size_t count() const { return level_ptr.size() - 1; }
  std::span<const int> level(std::size_t k) const {
    return {columns.data() + level_ptr[k], static_cast<std::size_t>(level_ptr[k + 1] - level_ptr[k])};
  }
};

/// Level schedule of a forest given as a parent array (-1 marks a root).
inline EliminationLevels level_schedule(const std::vector<int>& parent) {
  const std::size_t n = parent.size();
  std::vector<int> pending(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    const int p = parent[j];
    if (p == -1) continue;
    if (p < 0 || static_cast<std::size_t>(p) >= n || static_cast<std::size_t>(p) == j)
      throw std::invalid_argument("level_schedule: invalid parent of node " + std::to_string(j));
    ++pending[p];
  }
  EliminationLevels out;
  out.level_of.assign(n, 0);
  std::vector<int> ready;
  for (std::size_t j = 0; j < n; ++j)
    if (pending[j] == 0) ready.push_back(static_cast<int>(j));
  std::size_t processed = 0;
  while (!ready.empty()) {
    const int j = ready.back();
    ready.pop_back();
    ++processed;
    const int p = parent[j];
    if (p == -1) continue;
    out.level_of[p] = std::max(out.level_of[p], out.level_of[j] + 1);
    if (--pending[p] == 0) ready.push_back(p);
  }
  if (processed != n) throw std::invalid_argument("level_schedule: parent array contains a cycle");

  const int levels = n == 0 ? 0 : *std::max_element(out.level_of.begin(), out.level_of.end()) + 1;
  out.level_ptr.assign(static_cast<std::size_t>(levels) + 1, 0);
  for (int l : out.level_of) ++out.level_ptr[l + 1];
  for (int l = 0; l < levels; ++l) out.level_ptr[l + 1] += out.level_ptr[l];
  out.columns.resize(n);
  std::vector<int> next(out.level_ptr.begin(), out.level_ptr.end() - 1);
  for (std::size_t j = 0; j < n; ++j) out.columns[next[out.level_of[j]]++] = static_cast<int>(j);
  return out;
}

struct SymbolicFactorization {
  int n = 0;
  std::vector<int> perm;      // new -> original
  std::vector<int> perm_inv;  // original -> new
  std::vector<int> etree;     // parent per permuted column, -1 at roots
  SparsityPattern fill_pattern;  // L (diagonal first in each column)
  // Strict lower rows of L: row k holds columns row_col[row_ptr[k]..row_ptr[k+1]),
  // ascending, whose values live at L.values()[row_pos[...]].
  std::vector<int> row_ptr{0};
  std::vector<int> row_col;
  std::vector<int> row_pos;
  EliminationLevels levels;
  std::size_t fill_in = 0;  // nonzeros of L absent from the permuted lower triangle
};

inline SymbolicFactorization symbolic_factorize(const SparsityPattern& pattern, std::vector<int> perm) {
  const int n = pattern.n;
  if (perm.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("symbolic_factorize: permutation has wrong length");
  SymbolicFactorization s;
  s.n = n;
  s.perm_inv = invert_permutation(perm);
  s.perm = std::move(perm);

  // Strict upper triangle of PAPᵀ by column.
  std::vector<std::vector<int>> upper(static_cast<std::size_t>(n));
  std::size_t lower_nnz = 0;
  for (int c = 0; c < n; ++c)
    for (int p = pattern.col_ptr[c]; p < pattern.col_ptr[c + 1]; ++p) {
      const int i = s.perm_inv[pattern.row_idx[p]], j = s.perm_inv[c];
      if (i < j) {
        upper[j].push_back(i);
        ++lower_nnz;
      }
    }

  s.etree.assign(static_cast<std::size_t>(n), -1);
  {
    std::vector<int> ancestor(static_cast<std::size_t>(n), -1);
    for (int k = 0; k < n; ++k)
      for (int i : upper[k]) {
        while (i != -1 && i < k) {
          const int next = ancestor[i];
          ancestor[i] = k;
          if (next == -1) s.etree[i] = k;
          i = next;
        }
      }
  }

  // Row patterns of L from the row subtrees.
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  {
    std::vector<int> mark(static_cast<std::size_t>(n), -1);
    for (int k = 0; k < n; ++k) {
      mark[k] = k;
      for (int i : upper[k])
        for (; mark[i] != k; i = s.etree[i]) {
          rows[k].push_back(i);
          mark[i] = k;
        }
      std::sort(rows[k].begin(), rows[k].end());
    }
  }

  std::vector<int>& cp = s.fill_pattern.col_ptr;
  cp.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int j = 0; j < n; ++j) cp[j + 1] = 1;
  for (int k = 0; k < n; ++k)
    for (int j : rows[k]) ++cp[j + 1];
  for (int j = 0; j < n; ++j) cp[j + 1] += cp[j];
  s.fill_pattern.n = n;
  s.fill_pattern.row_idx.resize(static_cast<std::size_t>(cp[n]));
  std::vector<int> next(cp.begin(), cp.end() - 1);
  for (int j = 0; j < n; ++j) s.fill_pattern.row_idx[next[j]++] = j;

  s.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int k = 0; k < n; ++k) {
    s.row_ptr[k + 1] = s.row_ptr[k] + static_cast<int>(rows[k].size());
    for (int j : rows[k]) {
      const int pos = next[j]++;
      s.fill_pattern.row_idx[pos] = k;
      s.row_col.push_back(j);
      s.row_pos.push_back(pos);
    }
  }
  s.fill_in = s.row_col.size() - lower_nnz;
  s.levels = level_schedule(s.etree);
  return s;
}

/// Non-positive pivot: the matrix is not positive definite in the given order.
class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(int column, int original, double pivot)
      : std::runtime_error("non-positive pivot " + std::to_string(pivot) + " at permuted column " +
                           std::to_string(column) + " (original index " + std::to_string(original) + ")"),
        column_(column),
        original_(original) {}
  int column() const noexcept { return column_; }
  int original_index() const noexcept { return original_; }

 private:
  int column_;
  int original_;
};

struct CholeskyFactor {
  std::shared_ptr<const SymbolicFactorization> symbolic;
  SparseRealMatrix L;  // L·Lᵀ = P·A·Pᵀ
};

namespace detail {

// Levels smaller than this run inline; the barrier costs more than the work.
inline constexpr std::size_t kLevelGrain = 64;

template <typename F>
void for_each_in_level(ThreadPool* pool, std::span<const int> cols, F&& fn) {
  if (pool && pool->size() > 1 && cols.size() >= 2 * kLevelGrain)
    pool->parallel_for(0, cols.size(), kLevelGrain, [&](std::size_t t) { fn(cols[t]); });
  else
    for (int j : cols) fn(j);
}

}  // namespace detail

/// Left-looking numeric Cholesky. Columns of one elimination-tree level only
/// read columns of lower levels, so each level is factorized concurrently.
inline CholeskyFactor numeric_factorize(const SparseRealMatrix& a,
                                        std::shared_ptr<const SymbolicFactorization> sym,
                                        ThreadPool* pool = nullptr) {
  const SymbolicFactorization& s = *sym;
  if (a.size() != s.n) throw std::invalid_argument("numeric_factorize: dimension mismatch");
  const int n = s.n;
  const auto& lp = s.fill_pattern.col_ptr;
  const auto& li = s.fill_pattern.row_idx;
  std::vector<double> lx(li.size(), 0.0);
  std::vector<char> failed(static_cast<std::size_t>(n), 0);
  std::vector<double> pivots(static_cast<std::size_t>(n), 0.0);
  std::vector<char> outside(static_cast<std::size_t>(n), 0);

  auto column = [&](int j) {
    thread_local std::vector<double> work;
    thread_local std::vector<char> mark;
    if (work.size() < static_cast<std::size_t>(n)) {
      work.assign(static_cast<std::size_t>(n), 0.0);
      mark.assign(static_cast<std::size_t>(n), 0);
    }
    for (int p = lp[j]; p < lp[j + 1]; ++p) mark[li[p]] = 1;
    const int c = s.perm[j];
    for (int p = a.col_ptr()[c]; p < a.col_ptr()[c + 1]; ++p) {
      const int i = s.perm_inv[a.row_idx()[p]];
      if (i < j) continue;
      if (!mark[i]) {
        outside[j] = 1;
        continue;
      }
      work[i] += a.values()[p];
    }
    for (int e = s.row_ptr[j]; e < s.row_ptr[j + 1]; ++e) {
      const int k = s.row_col[e];
      const int start = s.row_pos[e];  // L(j,k)
      const double ljk = lx[start];
      for (int p = start; p < lp[k + 1]; ++p) work[li[p]] -= lx[p] * ljk;
    }
    const double d = work[j];
    pivots[j] = d;
    if (!(d > 0.0) || !std::isfinite(d)) failed[j] = 1;
    const double ljj = std::sqrt(std::max(d, 0.0));
    lx[lp[j]] = ljj;
    for (int p = lp[j] + 1; p < lp[j + 1]; ++p) lx[p] = ljj > 0.0 ? work[li[p]] / ljj : 0.0;
    for (int p = lp[j]; p < lp[j + 1]; ++p) {
      work[li[p]] = 0.0;
      mark[li[p]] = 0;
    }
  };

  for (std::size_t l = 0; l < s.levels.count(); ++l) {
    const auto cols = s.levels.level(l);
    detail::for_each_in_level(pool, cols, column);
    for (int j : cols)
      if (outside[j])
        throw std::invalid_argument("numeric_factorize: matrix pattern exceeds symbolic pattern in column " +
                                    std::to_string(j));
    int bad = -1;
    for (int j : cols)
      if (failed[j] && (bad < 0 || j < bad)) bad = j;
    if (bad >= 0) throw FactorizationError(bad, s.perm[bad], pivots[bad]);
  }
  return {std::move(sym), SparseRealMatrix(n, lp, li, std::move(lx))};
}

inline CholeskyFactor numeric_factorize(const SparseRealMatrix& a, const SymbolicFactorization& sym,
                                        ThreadPool* pool = nullptr) {
  return numeric_factorize(a, std::make_shared<const SymbolicFactorization>(sym), pool);
}

/// Minimum-degree ordering, symbolic and numeric factorization in one call.
inline CholeskyFactor factorize(const SparseRealMatrix& a, ThreadPool* pool = nullptr) {
  const SparsityPattern pattern = SparsityPattern::of(a);
  auto sym = std::make_shared<const SymbolicFactorization>(symbolic_factorize(pattern, min_degree_order(pattern)));
  return numeric_factorize(a, std::move(sym), pool);
}

/// Solves A·x = rhs. The forward sweep pulls from descendants (levels
/// ascending); the backward sweep pulls from ancestors (levels descending).
inline std::vector<double> solve(const CholeskyFactor& f, std::span<const double> rhs, ThreadPool* pool = nullptr) {
  const SymbolicFactorization& s = *f.symbolic;
  if (rhs.size() != static_cast<std::size_t>(s.n))
    throw std::invalid_argument("solve: rhs has length " + std::to_string(rhs.size()) + ", expected " +
                                std::to_string(s.n));
  const auto& lp = f.L.col_ptr();
  const auto& li = f.L.row_idx();
  const auto& lx = f.L.values();
  std::vector<double> y(rhs.size());
  for (int i = 0; i < s.n; ++i) y[i] = rhs[s.perm[i]];

  for (std::size_t l = 0; l < s.levels.count(); ++l)
    detail::for_each_in_level(pool, s.levels.level(l), [&](int i) {
      double sum = y[i];
      for (int e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) sum -= lx[s.row_pos[e]] * y[s.row_col[e]];
      y[i] = sum / lx[lp[i]];
    });
  for (std::size_t l = s.levels.count(); l-- > 0;)
    detail::for_each_in_level(pool, s.levels.level(l), [&](int j) {
      double sum = y[j];
      for (int p = lp[j] + 1; p < lp[j + 1]; ++p) sum -= lx[p] * y[li[p]];
      y[j] = sum / lx[lp[j]];
    });

  std::vector<double> x(rhs.size());
  for (int i = 0; i < s.n; ++i) x[s.perm[i]] = y[i];
  return x;
}

/// Plain-text dump of the ordering, elimination tree and level sets.
inline void write_symbolic(std::ostream& os, const SymbolicFactorization& s) {
  os << "n " << s.n << "\nfill_in " << s.fill_in << "\nnnz_L " << s.fill_pattern.row_idx.size() << "\nperm";
  for (int p : s.perm) os << ' ' << p;
  os << "\netree";
  for (int p : s.etree) os << ' ' << p;
  os << "\nlevels " << s.levels.count() << '\n';
  for (std::size_t l = 0; l < s.levels.count(); ++l) {
    os << "level " << l << ':';
    for (int j : s.levels.level(l)) os << ' ' << j;
    os << '\n';
  }
}

}  // namespace gfdpf
