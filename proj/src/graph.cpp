#include "hogdiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hogdiff {

int Graph::active_count() const {
  int c = 0;
  for (auto m : mask) c += (m != 0);
  return c;
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n_max; ++i)
    for (int j = i + 1; j < n_max; ++j)
      if (A(i, j) != 0.0) edges.emplace_back(i, j);
  return edges;
}

void validate(const Graph& g) {
  if (g.n_max < 0) throw InvalidGraphError("negative n_max");
  if (static_cast<int>(g.mask.size()) != g.n_max)
    throw InvalidGraphError("mask length does not match n_max");
  if (g.A.rows() != g.n_max || g.A.cols() != g.n_max)
    throw InvalidGraphError("adjacency shape does not match n_max");
  if (g.X.rows() != g.n_max)
    throw InvalidGraphError("feature row count does not match n_max");
  if (!g.A.allFinite() || !g.X.allFinite())
    throw InvalidGraphError("non-finite entry in graph data");
  for (int i = 0; i < g.n_max; ++i) {
    if (g.A(i, i) != 0.0) throw InvalidGraphError("nonzero diagonal in adjacency");
    for (int j = i + 1; j < g.n_max; ++j) {
      if (g.A(i, j) != g.A(j, i))
        throw InvalidGraphError("adjacency not exactly symmetric");
      if ((!g.mask[i] || !g.mask[j]) && g.A(i, j) != 0.0)
        throw InvalidGraphError("nonzero adjacency entry touching a masked node");
    }
    if (!g.mask[i] && g.X.row(i).cwiseAbs().sum() != 0.0)
      throw InvalidGraphError("nonzero feature row on a masked node");
  }
}

Graph make_graph(int n_max, Mask mask, Matrix X, Matrix A) {
  Graph g{n_max, std::move(mask), std::move(X), std::move(A)};
  validate(g);
  return g;
}

Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges,
                       int n_max, int feature_dim) {
  if (n_max < 0) n_max = n;
  if (n > n_max) throw InvalidGraphError("n exceeds n_max");
  Graph g;
  g.n_max = n_max;
  g.mask.assign(static_cast<size_t>(n_max), 0);
  for (int i = 0; i < n; ++i) g.mask[static_cast<size_t>(i)] = 1;
  g.X = Matrix::Zero(n_max, feature_dim);
  g.A = Matrix::Zero(n_max, n_max);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
      throw InvalidGraphError("edge endpoint out of range or self-loop");
    g.A(i, j) = 1.0;
    g.A(j, i) = 1.0;
  }
  validate(g);
  return g;
}

Matrix laplacian(const Graph& g) {
  validate(g);
  Matrix L = -g.A;
  L.diagonal() = g.A.rowwise().sum();
  return L;
}

QuantizationRule binary_rule() { return {{0.5}, {0, 1}}; }

QuantizationRule molecular_rule() { return {{0.5, 1.5, 2.5}, {0, 1, 2, 3}}; }

void validate(const QuantizationRule& rule) {
  if (rule.levels.size() != rule.thresholds.size() + 1)
    throw ConfigError("quantization rule needs |thresholds|+1 levels");
  for (size_t k = 1; k < rule.thresholds.size(); ++k)
    if (!(rule.thresholds[k - 1] < rule.thresholds[k]))
      throw ConfigError("quantization thresholds must be strictly ascending");
  for (size_t a = 0; a < rule.levels.size(); ++a)
    for (size_t b = a + 1; b < rule.levels.size(); ++b)
      if (rule.levels[a] == rule.levels[b])
        throw ConfigError("quantization levels must be distinct");
}

IntMatrix quantize(const Matrix& A, const QuantizationRule& rule) {
  validate(rule);
  IntMatrix out(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      const double v = A(i, j);
      size_t k = 0;
      while (k < rule.thresholds.size() && v >= rule.thresholds[k]) ++k;
      out(i, j) = rule.levels[k];
    }
  }
  out.diagonal().setZero();
  return out;
}

Graph permute(const Graph& g, const std::vector<int>& pi) {
  validate(g);
  if (static_cast<int>(pi.size()) != g.n_max)
    throw InvalidGraphError("permutation length does not match n_max");
  std::vector<char> seen(static_cast<size_t>(g.n_max), 0);
  for (int v : pi) {
    if (v < 0 || v >= g.n_max || seen[static_cast<size_t>(v)])
      throw InvalidGraphError("permutation is not a bijection");
    seen[static_cast<size_t>(v)] = 1;
  }
  Graph out;
  out.n_max = g.n_max;
  out.mask.assign(static_cast<size_t>(g.n_max), 0);
  out.X = Matrix::Zero(g.n_max, g.X.cols());
  out.A = Matrix::Zero(g.n_max, g.n_max);
  for (int i = 0; i < g.n_max; ++i) {
    out.mask[static_cast<size_t>(pi[static_cast<size_t>(i)])] = g.mask[static_cast<size_t>(i)];
    out.X.row(pi[static_cast<size_t>(i)]) = g.X.row(i);
    for (int j = 0; j < g.n_max; ++j)
      out.A(pi[static_cast<size_t>(i)], pi[static_cast<size_t>(j)]) = g.A(i, j);
  }
  validate(out);
  return out;
}

}  // namespace hogdiff
