#pragma once

#include <algorithm>
#include <iterator>
#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "gfdpf/sparse.hpp"

namespace gfdpf {

/// Minimum-degree elimination order on the quotient-free elimination graph.
/// Returns perm with perm[k] = original index eliminated k-th. Ties go to the
/// node with the smaller original degree, then the smaller index, so the
/// result is a pure function of the pattern.
inline std::vector<int> min_degree_order(const SparsityPattern& pattern) {
  if (!pattern.is_symmetric()) throw std::invalid_argument("min_degree_order: pattern is not symmetric");
  const int n = pattern.n;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int p = pattern.col_ptr[j]; p < pattern.col_ptr[j + 1]; ++p)
      if (pattern.row_idx[p] != j) adj[j].push_back(pattern.row_idx[p]);

  std::vector<int> original_degree(static_cast<std::size_t>(n));
  using Key = std::tuple<int, int, int>;
  std::set<Key> queue;
  for (int i = 0; i < n; ++i) {
    original_degree[i] = static_cast<int>(adj[i].size());
    queue.emplace(original_degree[i], original_degree[i], i);
  }

  std::vector<int> perm;
  perm.reserve(static_cast<std::size_t>(n));
  std::vector<int> merged;
  while (!queue.empty()) {
    const int v = std::get<2>(*queue.begin());
    queue.erase(queue.begin());
    perm.push_back(v);
    const std::vector<int> clique = std::move(adj[v]);
    adj[v].clear();
    for (int u : clique) {
      queue.erase(Key{static_cast<int>(adj[u].size()), original_degree[u], u});
      merged.clear();
      std::set_union(adj[u].begin(), adj[u].end(), clique.begin(), clique.end(), std::back_inserter(merged));
      std::erase_if(merged, [&](int w) { return w == u || w == v; });
      adj[u].swap(merged);
      queue.emplace(static_cast<int>(adj[u].size()), original_degree[u], u);
    }
  }
  return perm;
}

inline std::vector<int> invert_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size(), -1);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const int p = perm[k];
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || inv[p] != -1)
      throw std::invalid_argument("permutation is not a bijection");
    inv[p] = static_cast<int>(k);
  }
  return inv;
}

}  // namespace gfdpf
