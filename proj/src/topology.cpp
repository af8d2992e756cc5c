#include "hogdiff/topology.hpp"

#include <algorithm>
#include <limits>

namespace hogdiff::topo {

namespace {

using BoolRow = std::vector<std::uint8_t>;
using BoolMat = std::vector<BoolRow>;

BoolMat binarized(const Graph& g) {
  const size_t n = static_cast<size_t>(g.n_max);
  BoolMat adj(n, BoolRow(n, 0));
  for (int i = 0; i < g.n_max; ++i)
    for (int j = 0; j < g.n_max; ++j) adj[static_cast<size_t>(i)][static_cast<size_t>(j)] = g.A(i, j) != 0.0;
  return adj;
}

void check_edge_args(const Graph& g, int i, int j, int L_max) {
  if (L_max < 3) throw ConfigError("L_max must be at least 3");
  if (i < 0 || j < 0 || i >= g.n_max || j >= g.n_max || i == j || !g.is_edge(i, j))
    throw InvalidGraphError("(i,j) is not an edge of the graph");
}

FilteredGraph from_kept_edges(const Graph& g, const BoolMat& edge_keep) {
  FilteredGraph fg;
  fg.base = g;
  fg.edge_keep = edge_keep;
  fg.node_keep.assign(static_cast<size_t>(g.n_max), 0);
  for (int i = 0; i < g.n_max; ++i)
    for (int j = 0; j < g.n_max; ++j)
      if (edge_keep[static_cast<size_t>(i)][static_cast<size_t>(j)]) fg.node_keep[static_cast<size_t>(i)] = 1;
  return fg;
}

}  // namespace

void validate(const FilterSpec& spec) {
  if (spec.L_max < 3) throw ConfigError("filter L_max must be at least 3");
  if (spec.p < 2) throw ConfigError("simplex dimension p must be at least 2");
  if (spec.kind == FilterKind::periphery &&
      spec.base != FilterKind::cell && spec.base != FilterKind::simplex)
    throw ConfigError("periphery filter needs a cell or simplex base");
}

bool edge_in_cycle(const Graph& g, int i, int j, int L_max) {
  check_edge_args(g, i, j, L_max);
  const BoolMat adj = binarized(g);
  const int budget = L_max - 1;  // edges allowed on the replacement path

  // Depth-first search from i toward j with (i,j) removed. A node is expanded
  // again only when reached at a strictly smaller depth, so each node is
  // explored at most `budget` times while the search still finds any path
  // within the bound.
  std::vector<int> best_depth(static_cast<size_t>(g.n_max), std::numeric_limits<int>::max());
  std::vector<std::pair<int, int>> stack;
  stack.emplace_back(i, 0);
  best_depth[static_cast<size_t>(i)] = 0;
  while (!stack.empty()) {
    const auto [u, d] = stack.back();
    stack.pop_back();
    if (d >= budget) continue;
    for (int v = 0; v < g.n_max; ++v) {
      if (!adj[static_cast<size_t>(u)][static_cast<size_t>(v)]) continue;
      if ((u == i && v == j) || (u == j && v == i)) continue;  // removed edge
      if (v == j) return true;
      const int nd = d + 1;
      if (nd < best_depth[static_cast<size_t>(v)]) {
        best_depth[static_cast<size_t>(v)] = nd;
        stack.emplace_back(v, nd);
      }
    }
  }
  return false;
}

bool edge_in_cycle_oracle(const Graph& g, int i, int j, int L_max) {
  check_edge_args(g, i, j, L_max);
  const size_t n = static_cast<size_t>(g.n_max);
  BoolMat adj = binarized(g);
  adj[static_cast<size_t>(i)][static_cast<size_t>(j)] = 0;
  adj[static_cast<size_t>(j)][static_cast<size_t>(i)] = 0;

  // Power iteration on the boolean matrix: walks of exactly m edges.
  BoolMat walk = adj;
  for (int m = 1; m <= L_max - 1; ++m) {
    if (walk[static_cast<size_t>(i)][static_cast<size_t>(j)]) return true;
    if (m == L_max - 1) break;
    BoolMat next(n, BoolRow(n, 0));
    for (size_t a = 0; a < n; ++a)
      for (size_t k = 0; k < n; ++k)
        if (walk[a][k])
          for (size_t b = 0; b < n; ++b)
            if (adj[k][b]) next[a][b] = 1;
    walk = std::move(next);
  }
  return false;
}

FilteredGraph cell_filter(const Graph& g, int L_max) {
  validate(g);
  if (L_max < 3) throw ConfigError("L_max must be at least 3");
  const size_t n = static_cast<size_t>(g.n_max);
  BoolMat keep(n, BoolRow(n, 0));
  for (auto [i, j] : g.edge_list()) {
    if (edge_in_cycle(g, i, j, L_max)) {
      keep[static_cast<size_t>(i)][static_cast<size_t>(j)] = 1;
      keep[static_cast<size_t>(j)][static_cast<size_t>(i)] = 1;
    }
  }
  return from_kept_edges(g, keep);
}

std::vector<std::vector<int>> enumerate_simplices(const Graph& g, int p) {
  validate(g);
  if (p < 2) throw ConfigError("simplex dimension p must be at least 2");
  const BoolMat adj = binarized(g);
  const int size = p + 1;
  std::vector<std::vector<int>> out;
  std::vector<int> cur;

  // Grow ascending cliques; candidates are higher-indexed common neighbours.
  auto extend = [&](auto&& self, const std::vector<int>& cand) -> void {
    if (static_cast<int>(cur.size()) == size) {
      out.push_back(cur);
      return;
    }
    for (size_t idx = 0; idx < cand.size(); ++idx) {
      const int v = cand[idx];
      std::vector<int> next;
      for (size_t rest = idx + 1; rest < cand.size(); ++rest)
        if (adj[static_cast<size_t>(v)][static_cast<size_t>(cand[rest])]) next.push_back(cand[rest]);
      if (static_cast<int>(cur.size()) + 1 + static_cast<int>(next.size()) < size)
        continue;
      cur.push_back(v);
      self(self, next);
      cur.pop_back();
    }
  };

  std::vector<int> all;
  for (int v = 0; v < g.n_max; ++v) all.push_back(v);
  extend(extend, all);
  return out;
}

FilteredGraph simplex_filter(const Graph& g, int p) {
  const auto cliques = enumerate_simplices(g, p);
  const size_t n = static_cast<size_t>(g.n_max);
  BoolMat keep(n, BoolRow(n, 0));
  for (const auto& clique : cliques)
    for (size_t a = 0; a < clique.size(); ++a)
      for (size_t b = a + 1; b < clique.size(); ++b) {
        keep[static_cast<size_t>(clique[a])][static_cast<size_t>(clique[b])] = 1;
        keep[static_cast<size_t>(clique[b])][static_cast<size_t>(clique[a])] = 1;
      }
  return from_kept_edges(g, keep);
}

FilteredGraph periphery_filter(const Graph& g, const FilterSpec& spec) {
  FilteredGraph inner;
  if (spec.kind == FilterKind::cell) {
    inner = cell_filter(g, spec.L_max);
  } else if (spec.kind == FilterKind::simplex) {
    inner = simplex_filter(g, spec.p);
  } else {
    throw ConfigError("periphery complement needs a cell or simplex filter");
  }
  const size_t n = static_cast<size_t>(g.n_max);
  BoolMat keep(n, BoolRow(n, 0));
  for (auto [i, j] : g.edge_list()) {
    if (!inner.keeps_edge(i, j)) {
      keep[static_cast<size_t>(i)][static_cast<size_t>(j)] = 1;
      keep[static_cast<size_t>(j)][static_cast<size_t>(i)] = 1;
    }
  }
  return from_kept_edges(g, keep);
}

FilteredGraph apply_filter(const Graph& g, const FilterSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case FilterKind::cell:
      return cell_filter(g, spec.L_max);
    case FilterKind::simplex:
      return simplex_filter(g, spec.p);
    case FilterKind::periphery: {
      FilterSpec base_spec = spec;
      base_spec.kind = spec.base;
      return periphery_filter(g, base_spec);
    }
    case FilterKind::none: {
      validate(g);
      const size_t n = static_cast<size_t>(g.n_max);
      BoolMat keep(n, BoolRow(n, 0));
      for (auto [i, j] : g.edge_list()) {
        keep[static_cast<size_t>(i)][static_cast<size_t>(j)] = 1;
        keep[static_cast<size_t>(j)][static_cast<size_t>(i)] = 1;
      }
      FilteredGraph fg = from_kept_edges(g, keep);
      fg.node_keep.assign(g.mask.begin(), g.mask.end());  // isolated actives stay
      return fg;
    }
    case FilterKind::noise:
      throw ConfigError("noise stage has no graph realization; drawn at use time");
  }
  throw ConfigError("unknown filter kind");
}

Graph filtered_view(const FilteredGraph& fg) {
  Graph out = fg.base;
  for (int i = 0; i < out.n_max; ++i) {
    if (!fg.node_keep[static_cast<size_t>(i)]) out.X.row(i).setZero();
    for (int j = 0; j < out.n_max; ++j)
      if (!fg.edge_keep[static_cast<size_t>(i)][static_cast<size_t>(j)]) out.A(i, j) = 0.0;
  }
  validate(out);
  return out;
}

long long count_chordless_cycles(const Graph& g, int L_max) {
  validate(g);
  if (L_max < 3) throw ConfigError("L_max must be at least 3");
  const BoolMat adj = binarized(g);
  const int n = g.n_max;
  long long count = 0;
  std::vector<std::uint8_t> onpath(static_cast<size_t>(n), 0);
  std::vector<int> path;

  // Canonical orientation: the anchor s is the smallest cycle vertex and the
  // first step goes to the smaller of the two anchor neighbours, so each
  // chordless cycle is visited exactly once.
  auto extend = [&](auto&& self, int s) -> void {
    const int last = path.back();
    for (int w = s + 1; w < n; ++w) {
      if (!adj[static_cast<size_t>(last)][static_cast<size_t>(w)] || onpath[static_cast<size_t>(w)]) continue;
      // Reject chords against the path interior (everything but the last).
      bool chord = false;
      for (size_t k = 1; k + 1 < path.size(); ++k)
        if (adj[static_cast<size_t>(w)][static_cast<size_t>(path[k])]) {
          chord = true;
          break;
        }
      if (chord) continue;
      if (adj[static_cast<size_t>(w)][static_cast<size_t>(s)]) {
        // Closing edge; a cycle needs at least three vertices, and the
        // orientation check keeps one traversal per cycle. No extension past
        // w: any longer cycle would carry the chord (w, s).
        if (path.size() >= 2 && path[1] < w) ++count;
        continue;
      }
      if (static_cast<int>(path.size()) + 1 >= L_max) continue;  // no room to close
      onpath[static_cast<size_t>(w)] = 1;
      path.push_back(w);
      self(self, s);
      path.pop_back();
      onpath[static_cast<size_t>(w)] = 0;
    }
  };

  for (int s = 0; s < n; ++s) {
    for (int v = s + 1; v < n; ++v) {
      if (!adj[static_cast<size_t>(s)][static_cast<size_t>(v)]) continue;
      path = {s, v};
      onpath[static_cast<size_t>(s)] = 1;
      onpath[static_cast<size_t>(v)] = 1;
      extend(extend, s);
      onpath[static_cast<size_t>(s)] = 0;
      onpath[static_cast<size_t>(v)] = 0;
    }
  }
  return count;
}

HoStatistics ho_statistics(const std::vector<Graph>& dataset, int max_simplex_p,
                           int L_max) {
  if (dataset.empty()) throw ConfigError("ho_statistics needs a nonempty dataset");
  if (max_simplex_p < 2) throw ConfigError("max_simplex_p must be at least 2");
  HoStatistics out;
  out.max_simplex_p = max_simplex_p;
  out.L_max = L_max;
  out.avg_simplices.assign(static_cast<size_t>(max_simplex_p - 1), 0.0);
  for (const Graph& g : dataset) {
    for (int p = 2; p <= max_simplex_p; ++p)
      out.avg_simplices[static_cast<size_t>(p - 2)] +=
          static_cast<double>(enumerate_simplices(g, p).size());
    out.avg_two_cells += static_cast<double>(count_chordless_cycles(g, L_max));
  }
  const double m = static_cast<double>(dataset.size());
  for (double& v : out.avg_simplices) v /= m;
  out.avg_two_cells /= m;
  return out;
}

}  // namespace hogdiff::topo
