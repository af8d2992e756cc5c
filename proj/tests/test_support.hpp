#pragma once

// Small self-contained graph builders for tests. Deliberately independent of
// the datasets module so generator bugs cannot mask library bugs.

#include <numeric>
#include <utility>
#include <vector>

#include "hogdiff/graph.hpp"
#include "hogdiff/rng.hpp"

namespace testsupport {

inline hogdiff::Graph path_graph(int n, int n_max = -1) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return hogdiff::graph_from_edges(n, e, n_max);
}

inline hogdiff::Graph cycle_graph(int n, int n_max = -1) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return hogdiff::graph_from_edges(n, e, n_max);
}

inline hogdiff::Graph complete_graph(int n, int n_max = -1) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return hogdiff::graph_from_edges(n, e, n_max);
}

inline hogdiff::Graph star_graph(int leaves, int n_max = -1) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return hogdiff::graph_from_edges(leaves + 1, e, n_max);
}

inline hogdiff::Graph er_graph(int n, double p, std::uint64_t seed, int n_max = -1) {
  hogdiff::Rng rng(seed);
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) e.emplace_back(i, j);
  return hogdiff::graph_from_edges(n, e, n_max);
}

inline std::vector<int> random_permutation(int n, std::uint64_t seed) {
  hogdiff::Rng rng(seed);
  std::vector<int> pi(static_cast<size_t>(n));
  std::iota(pi.begin(), pi.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.integer(static_cast<std::uint64_t>(i) + 1));
    std::swap(pi[static_cast<size_t>(i)], pi[static_cast<size_t>(j)]);
  }
  return pi;
}

}  // namespace testsupport
