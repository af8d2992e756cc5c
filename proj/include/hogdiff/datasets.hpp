#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hogdiff/graph.hpp"
#include "hogdiff/rng.hpp"
#include "hogdiff/spectral.hpp"

namespace hogdiff::data {

// One stored graph: a human-readable id, the graph itself (unpadded, every
// node active), and optionally a cached spectral decomposition of its
// Laplacian so later stages can skip recomputing it.
struct DatasetRecord {
  std::string id;
  Graph graph;
  std::optional<SpectralState> basis;
};

using Dataset = std::vector<DatasetRecord>;

// Community graphs: n uniform on [12, 20], nodes 0..ceil(n/2)-1 form the
// first community and the rest the second, each half wired as an independent
// edge-probability-0.7 random graph, joined by ceil(n/20) bridge edges chosen
// uniformly among cross pairs. Each graph draws from its own stream derived
// from (one value off `rng`, graph index), so generation parallelizes without
// changing output.
Dataset gen_community_small(int count, Rng& rng);

// Stochastic block model: 2..5 contiguous communities of 20..40 nodes each,
// intra-community edge probability 0.3, inter 0.05. When `sizes_out` is
// given, it receives the per-graph community size lists (blocks are laid out
// in order, so sizes fully determine the assignment).
Dataset gen_sbm(int count, Rng& rng,
                std::vector<std::vector<int>>* sizes_out = nullptr);

// Line-delimited JSON, one record per line; schema in docs/FORMATS.md.
// Records store unpadded graphs with integer edge weights; save rejects
// anything else, load reports malformed lines by 1-based number.
void save(const Dataset& ds, const std::string& path);
Dataset load(const std::string& path);

// Drops masked slots, keeping active nodes in order. Lets padded sampler
// output be stored in the unpadded file format.
Graph compact(const Graph& g);

enum class FeatureMode { degree_onehot, degree_plus_spectral };

// Hand-crafted node inputs: degree one-hot at index min(degree, cap-1),
// optionally concatenated with each node's row of the first k Laplacian
// eigenvectors (computed on the compacted graph, so padding never shifts the
// spectrum). Masked rows are zero.
Matrix default_features(const Graph& g, FeatureMode mode, int cap = 8,
                        int k = 2);

}  // namespace hogdiff::data
