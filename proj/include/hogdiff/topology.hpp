#pragma once

#include <vector>

#include "hogdiff/graph.hpp"

namespace hogdiff::topo {

enum class FilterKind { cell, simplex, periphery, none, noise };

// Selects which skeleton an intermediate stage keeps. `base` is read only when
// kind == periphery and names the filter being complemented.
struct FilterSpec {
  FilterKind kind = FilterKind::cell;
  int p = 2;       // simplex dimension; a p-simplex is a (p+1)-clique
  int L_max = 8;   // maximum cycle length for 2-cell membership
  FilterKind base = FilterKind::cell;
};

void validate(const FilterSpec& spec);

// Kept subsets over the padded node slate. Dropped elements stay as zeroed
// slots so bridge endpoints remain shape-compatible.
struct FilteredGraph {
  Graph base;
  std::vector<std::vector<std::uint8_t>> edge_keep;  // n_max x n_max, symmetric
  std::vector<std::uint8_t> node_keep;               // length n_max

  bool keeps_edge(int i, int j) const { return edge_keep[static_cast<size_t>(i)][static_cast<size_t>(j)] != 0; }
};

// True iff, with edge (i,j) removed, a simple path from i to j of length
// <= L_max - 1 exists, i.e. (i,j) lies on a cycle of length <= L_max.
// Depth-bounded search over the binarized adjacency.
bool edge_in_cycle(const Graph& g, int i, int j, int L_max);

// Same predicate via walk-count powers: (A_bar^m)_ij > 0 for some
// m <= L_max - 1 with A_bar the binarized adjacency minus the edge (i,j).
// Slower; exists to cross-check edge_in_cycle.
bool edge_in_cycle_oracle(const Graph& g, int i, int j, int L_max);

// Keeps edges on short cycles and the nodes incident to them.
FilteredGraph cell_filter(const Graph& g, int L_max);

// All (p+1)-cliques of the binarized graph, each as an ascending node tuple,
// complete and duplicate-free.
std::vector<std::vector<int>> enumerate_simplices(const Graph& g, int p);

// Keeps nodes/edges contained in at least one p-simplex.
FilteredGraph simplex_filter(const Graph& g, int p);

// Exact complement (within the edge set) of the cell or simplex filter named
// by spec.kind; node kept iff incident to a kept edge.
FilteredGraph periphery_filter(const Graph& g, const FilterSpec& spec);

// Dispatch on spec.kind. kind == none keeps everything; kind == noise has no
// graph realization (the pipeline substitutes a Gaussian state) and is
// rejected here.
FilteredGraph apply_filter(const Graph& g, const FilterSpec& spec);

// The kept structure as a Graph: dropped edges zeroed, feature rows of
// dropped nodes zeroed, mask inherited from the base graph so shapes and
// active slots stay aligned across stages.
Graph filtered_view(const FilteredGraph& fg);

// Number of chordless cycles of length 3..L_max (triangles included).
long long count_chordless_cycles(const Graph& g, int L_max);

// Dataset-level averages of higher-order structure counts.
struct HoStatistics {
  int max_simplex_p = 3;
  int L_max = 8;
  std::vector<double> avg_simplices;  // index k holds the (k+2)-dimension average
  double avg_two_cells = 0.0;         // chordless cycles of length <= L_max
};

HoStatistics ho_statistics(const std::vector<Graph>& dataset, int max_simplex_p,
                           int L_max);

}  // namespace hogdiff::topo
