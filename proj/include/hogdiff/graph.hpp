#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hogdiff/errors.hpp"
#include "hogdiff/linalg.hpp"

namespace hogdiff {

using Mask = std::vector<std::uint8_t>;

// Padded graph: a fixed-size node slate with an activity mask. Masked rows and
// columns of A (and masked rows of X) are identically zero, so graphs of
// different true sizes share one shape and diffusion states stay aligned
// across stages. Instances are immutable by convention after construction and
// safe to share across threads.
struct Graph {
  int n_max = 0;
  Mask mask;  // length n_max, 1 = active
  Matrix X;   // n_max x d node features
  Matrix A;   // n_max x n_max weighted adjacency, symmetric, zero diagonal

  int active_count() const;
  int feature_dim() const { return static_cast<int>(X.cols()); }
  bool is_edge(int i, int j) const { return A(i, j) != 0.0; }

  // Upper-triangle (i < j) pairs with nonzero weight, ascending.
  std::vector<std::pair<int, int>> edge_list() const;
};

// Throws InvalidGraphError naming the first violated invariant.
void validate(const Graph& g);

// Validating constructor.
Graph make_graph(int n_max, Mask mask, Matrix X, Matrix A);

// Unit-weight graph on nodes 0..n-1 padded to n_max (default: n_max = n),
// with a zero feature block of width feature_dim.
Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges,
                       int n_max = -1, int feature_dim = 0);

// L = D - A with D = diag(row sums of A). Masked rows/columns are zero.
Matrix laplacian(const Graph& g);

// Entry-wise bucketing: value < thresholds[0] maps to levels[0], value in
// [thresholds[k-1], thresholds[k]) to levels[k], value >= last threshold to
// levels.back().
struct QuantizationRule {
  std::vector<double> thresholds;  // strictly ascending
  std::vector<long long> levels;   // size thresholds.size() + 1, distinct
};

QuantizationRule binary_rule();     // {0.5} -> {0, 1}
QuantizationRule molecular_rule();  // {0.5, 1.5, 2.5} -> {0, 1, 2, 3}

void validate(const QuantizationRule& rule);

// Symmetric input gives symmetric output; diagonal forced to 0.
IntMatrix quantize(const Matrix& A, const QuantizationRule& rule);

// pi maps old index -> new index; must be a bijection on 0..n_max-1.
Graph permute(const Graph& g, const std::vector<int>& pi);

}  // namespace hogdiff
