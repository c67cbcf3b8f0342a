#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace gfdpf {

template <typename T>
struct Triplet {
  int row;
  int col;
  T value;
};

/// Square compressed-sparse-column matrix. Row indices are strictly increasing
/// within each column.
template <typename T>
class SparseMatrix {
 public:
  using value_type = T;

  SparseMatrix() = default;

  /// Builds from raw CSC arrays. Rows must already be sorted and unique per column.
  SparseMatrix(int n, std::vector<int> col_ptr, std::vector<int> row_idx, std::vector<T> values)
      : n_(n), col_ptr_(std::move(col_ptr)), row_idx_(std::move(row_idx)), values_(std::move(values)) {
    if (n_ < 0 || col_ptr_.size() != static_cast<std::size_t>(n_) + 1 ||
        row_idx_.size() != values_.size() || static_cast<std::size_t>(col_ptr_.back()) != values_.size())
      throw std::invalid_argument("SparseMatrix: inconsistent CSC arrays");
    for (int j = 0; j < n_; ++j)
      for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
        if (row_idx_[p] < 0 || row_idx_[p] >= n_)
          throw std::invalid_argument("SparseMatrix: row index out of range");
        if (p > col_ptr_[j] && row_idx_[p] <= row_idx_[p - 1])
          throw std::invalid_argument("SparseMatrix: rows not strictly increasing");
      }
  }

  /// Sums duplicates and drops exact zeros.
  static SparseMatrix from_triplets(int n, std::vector<Triplet<T>> entries) {
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    std::vector<int> ptr(static_cast<std::size_t>(n) + 1, 0), rows;
    std::vector<T> vals;
    for (std::size_t k = 0; k < entries.size();) {
      const auto& e = entries[k];
      if (e.row < 0 || e.row >= n || e.col < 0 || e.col >= n)
        throw std::invalid_argument("SparseMatrix: triplet index out of range");
      T sum{};
      std::size_t m = k;
      for (; m < entries.size() && entries[m].row == e.row && entries[m].col == e.col; ++m)
        sum += entries[m].value;
      if (sum != T{}) {
        rows.push_back(e.row);
        vals.push_back(sum);
        ++ptr[e.col + 1];
      }
      k = m;
    }
    for (int j = 0; j < n; ++j) ptr[j + 1] += ptr[j];
    return SparseMatrix(n, std::move(ptr), std::move(rows), std::move(vals));
  }

  /// Assembles from independently built columns (sorted by row, zeros dropped).
  static SparseMatrix from_columns(int n, const std::vector<std::vector<std::pair<int, T>>>& cols) {
    std::vector<int> ptr(static_cast<std::size_t>(n) + 1, 0), rows;
    std::vector<T> vals;
    for (int j = 0; j < n; ++j) {
      for (const auto& [i, v] : cols[j]) {
        if (v == T{}) continue;
        rows.push_back(i);
        vals.push_back(v);
      }
      ptr[j + 1] = static_cast<int>(rows.size());
    }
    return SparseMatrix(n, std::move(ptr), std::move(rows), std::move(vals));
  }

  int size() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  const std::vector<int>& col_ptr() const noexcept { return col_ptr_; }
  const std::vector<int>& row_idx() const noexcept { return row_idx_; }
  const std::vector<T>& values() const noexcept { return values_; }

  T coeff(int i, int j) const {
    auto first = row_idx_.begin() + col_ptr_[j];
    auto last = row_idx_.begin() + col_ptr_[j + 1];
    auto it = std::lower_bound(first, last, i);
    return (it != last && *it == i) ? values_[it - row_idx_.begin()] : T{};
  }

  SparseMatrix transpose() const {
    std::vector<int> ptr(static_cast<std::size_t>(n_) + 1, 0);
    for (int r : row_idx_) ++ptr[r + 1];
    for (int i = 0; i < n_; ++i) ptr[i + 1] += ptr[i];
    std::vector<int> rows(nnz());
    std::vector<T> vals(nnz());
    std::vector<int> next(ptr.begin(), ptr.end() - 1);
    for (int j = 0; j < n_; ++j)
      for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) {
        const int q = next[row_idx_[p]]++;
        rows[q] = j;
        vals[q] = values_[p];
      }
    return SparseMatrix(n_, std::move(ptr), std::move(rows), std::move(vals));
  }

  /// Pattern and values equal to the transpose within `rel_tol` of the largest entry.
  bool is_symmetric(double rel_tol = 1e-12) const {
    const SparseMatrix t = transpose();
    if (t.col_ptr_ != col_ptr_ || t.row_idx_ != row_idx_) return false;
    double scale = 0.0;
    for (const T& v : values_) scale = std::max(scale, static_cast<double>(std::abs(v)));
    for (std::size_t p = 0; p < values_.size(); ++p)
      if (std::abs(values_[p] - t.values_[p]) > rel_tol * scale) return false;
    return true;
  }

  /// Infinity norm (max absolute row sum).
  double norm_inf() const {
    std::vector<double> rows(static_cast<std::size_t>(n_), 0.0);
    for (std::size_t p = 0; p < values_.size(); ++p) rows[row_idx_[p]] += std::abs(values_[p]);
    return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
  }

  std::vector<T> multiply(const std::vector<T>& x) const {
    std::vector<T> y(static_cast<std::size_t>(n_), T{});
    for (int j = 0; j < n_; ++j)
      for (int p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) y[row_idx_[p]] += values_[p] * x[j];
    return y;
  }

  bool operator==(const SparseMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<int> col_ptr_{0};
  std::vector<int> row_idx_;
  std::vector<T> values_;
};

using SparseRealMatrix = SparseMatrix<double>;
using SparseComplexMatrix = SparseMatrix<std::complex<double>>;

/// Structure-only view of a square matrix.
struct SparsityPattern {
  int n = 0;
  std::vector<int> col_ptr{0};
  std::vector<int> row_idx;

  template <typename T>
  static SparsityPattern of(const SparseMatrix<T>& m) {
    return {m.size(), m.col_ptr(), m.row_idx()};
  }

  bool is_symmetric() const {
    const SparseRealMatrix m(n, col_ptr, row_idx, std::vector<double>(row_idx.size(), 1.0));
    return m.is_symmetric(0.0);
  }
};

// MatrixMarket coordinate format. Symmetric matrices are written in full
// ("general") form so the file is self-describing without a symmetry pass.
template <typename T>
void write_matrix_market(std::ostream& os, const SparseMatrix<T>& m) {
  constexpr bool is_complex = !std::is_floating_point_v<T>;
  os << "%%MatrixMarket matrix coordinate " << (is_complex ? "complex" : "real") << " general\n";
  os << m.size() << ' ' << m.size() << ' ' << m.nnz() << '\n';
  os.precision(std::numeric_limits<double>::max_digits10);
  for (int j = 0; j < m.size(); ++j)
    for (int p = m.col_ptr()[j]; p < m.col_ptr()[j + 1]; ++p) {
      os << m.row_idx()[p] + 1 << ' ' << j + 1 << ' ';
      if constexpr (is_complex)
        os << m.values()[p].real() << ' ' << m.values()[p].imag() << '\n';
      else
        os << m.values()[p] << '\n';
    }
}

inline SparseRealMatrix read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw std::runtime_error("MatrixMarket: missing banner");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (object != "matrix" || format != "coordinate" || (field != "real" && field != "integer"))
    throw std::runtime_error("MatrixMarket: only real coordinate matrices are supported");
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general")
    throw std::runtime_error("MatrixMarket: unsupported symmetry '" + symmetry + "'");
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream dims(line);
  long rows = 0, cols = 0, entries = 0;
  if (!(dims >> rows >> cols >> entries) || rows != cols)
    throw std::runtime_error("MatrixMarket: expected square size line");
  std::vector<Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
  for (long k = 0; k < entries; ++k) {
    long i = 0, j = 0;
    double v = 0.0;
    if (!(is >> i >> j >> v)) throw std::runtime_error("MatrixMarket: truncated entry list");
    trips.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
    if (symmetric && i != j) trips.push_back({static_cast<int>(j - 1), static_cast<int>(i - 1), v});
  }
  return SparseRealMatrix::from_triplets(static_cast<int>(rows), std::move(trips));
}

}  // namespace gfdpf
