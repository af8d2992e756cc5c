#pragma once

#include <string>
#include <vector>

#include "hogdiff/graph.hpp"

namespace hogdiff::metrics {

// Normalized histogram over fixed bin edges. Two histograms are comparable
// (EMD, TV) only when their edges are identical.
struct StatHistogram {
  Vector edges;    // bins+1 ascending edges
  Vector weights;  // bins entries, nonnegative, summing to 1
};

void validate(const StatHistogram& h);

// Active-node degree distribution on unit-width integer bins 0..n_bins-1
// (default: n_max, the largest possible degree plus one). A graph with no
// active nodes puts all mass in bin 0. Edges count when nonzero, whatever
// their weight.
StatHistogram degree_hist(const Graph& g, int n_bins = -1);

// Local clustering coefficient (triangles over wedge count, 0 below degree
// 2) binned uniformly on [0, 1]; the value 1 lands in the last bin.
StatHistogram clustering_hist(const Graph& g, int bins);

// Automorphism orbits of the six connected four-node graphlets, in this
// column order. A "paw" is a triangle with a pendant edge, a "diamond" is a
// four-clique missing one edge.
enum Orbit : int {
  orbit_path_end = 0,      // end of an induced 4-path
  orbit_path_mid = 1,      // interior of an induced 4-path
  orbit_star_leaf = 2,     // leaf of an induced 3-star
  orbit_star_center = 3,   // center of an induced 3-star
  orbit_cycle = 4,         // any node of an induced 4-cycle
  orbit_paw_tail = 5,      // the pendant node of a paw
  orbit_paw_far = 6,       // triangle node not touching the pendant
  orbit_paw_joint = 7,     // triangle node holding the pendant
  orbit_diamond_side = 8,  // degree-2 node of a diamond
  orbit_diamond_hub = 9,   // degree-3 node of a diamond
  orbit_clique = 10,       // any node of an induced 4-clique
};
constexpr int kOrbitCount = 11;

// Per-node orbit participation counts, n_max x kOrbitCount: every 4-subset
// of active nodes inducing a connected subgraph bumps each member's counter
// for its orbit in that graphlet. Brute force over all C(n, 4) subsets;
// requires at most 200 active nodes.
IntMatrix orbit_counts(const Graph& g);

// Laplacian eigenvalue distribution of the active subgraph, uniform bins on
// [0, range_max] (default: n_max, an upper bound for unit-weight graphs).
// The right edge is inclusive so a complete graph's top eigenvalue counts,
// and eigenvalues are snapped to a 1e-9 grid before binning so solver
// jitter cannot move an exactly-on-edge value across node relabelings.
StatHistogram spectral_hist(const Graph& g, int bins, double range_max = -1.0);

// 1-D Wasserstein-1 between histograms on shared edges: sum over bins of
// |cumulative difference| times bin width.
double emd_1d(const StatHistogram& a, const StatHistogram& b);

// Total variation: half the L1 distance between weight vectors.
double tv_distance(const StatHistogram& a, const StatHistogram& b);

enum class KernelKind { gaussian_emd, gaussian_tv };

struct Kernel {
  KernelKind kind = KernelKind::gaussian_emd;
  double sigma = 1.0;
};

const char* kernel_name(KernelKind k);
KernelKind kernel_from_name(const std::string& name);

// Biased (V-statistic) squared MMD with k(x, y) = exp(-d(x, y)^2 / (2 sigma^2)):
// mean within-A kernel + mean within-B kernel - 2 mean cross kernel, diagonal
// included, so identical sets give exactly 0. Can dip a hair below zero in
// floating point; callers report max(value, 0).
double mmd_squared(const std::vector<StatHistogram>& a,
                   const std::vector<StatHistogram>& b, const Kernel& k);

struct EvalConfig {
  int clustering_bins = 100;
  int spectral_bins = 200;
  Kernel kernel;  // one kernel for all four statistics
};

struct MMDEntry {
  std::string stat;  // "Deg.", "Clus.", "Orbit", "Spec.", or "Avg."
  double value;      // squared MMD, clipped at 0
};

struct MMDReport {
  std::vector<MMDEntry> entries;
  KernelKind kernel = KernelKind::gaussian_emd;
  double sigma = 1.0;
  std::size_t n_generated = 0;
  std::size_t n_reference = 0;
};

// Degree, clustering, orbit, and spectral MMDs between two graph sets, plus
// their average. Bin edges are shared across both sets: degree and spectral
// ranges stretch to the largest slate in either set, and the orbit statistic
// is the histogram of per-node total orbit counts on unit bins up to the
// largest observed total.
MMDReport eval_report(const std::vector<Graph>& generated,
                      const std::vector<Graph>& reference,
                      const EvalConfig& cfg = {});

// Fixed-width text rendering, one row per statistic.
std::string format_table(const MMDReport& r);

}  // namespace hogdiff::metrics
