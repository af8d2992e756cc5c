#include "hogdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hogdiff/spectral.hpp"

namespace hogdiff::metrics {

namespace {

std::vector<int> active_nodes(const Graph& g) {
  std::vector<int> keep;
  for (int i = 0; i < g.n_max; ++i)
    if (g.mask[i]) keep.push_back(i);
  return keep;
}

StatHistogram unit_bins_hist(int bins) {
  StatHistogram h;
  h.edges = Vector::LinSpaced(bins + 1, 0.0, static_cast<double>(bins));
  h.weights = Vector::Zero(bins);
  return h;
}

void normalize_or_default(StatHistogram& h, double total) {
  if (total <= 0.0)
    h.weights(0) = 1.0;  // empty-graph convention: all mass in bin 0
  else
    h.weights /= total;
}

int neighbor_count(const Graph& g, int i) {
  int deg = 0;
  for (int j = 0; j < g.n_max; ++j)
    if (j != i && g.mask[j] && g.A(i, j) != 0.0) ++deg;
  return deg;
}

}  // namespace

void validate(const StatHistogram& h) {
  if (h.edges.size() < 2)
    throw ConfigError("histogram needs at least one bin");
  if (h.weights.size() != h.edges.size() - 1)
    throw ConfigError("histogram weight count must be bin count");
  for (int i = 0; i + 1 < h.edges.size(); ++i)
    if (!(h.edges(i) < h.edges(i + 1)))
      throw ConfigError("histogram edges must be strictly ascending");
  double total = 0.0;
  for (int i = 0; i < h.weights.size(); ++i) {
    if (h.weights(i) < 0.0)
      throw ConfigError("histogram weights must be nonnegative");
    total += h.weights(i);
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("histogram weights must sum to 1");
}

StatHistogram degree_hist(const Graph& g, int n_bins) {
  hogdiff::validate(g);
  if (n_bins < 0) n_bins = g.n_max;
  if (n_bins < 1) throw ConfigError("degree histogram needs at least one bin");
  StatHistogram h = unit_bins_hist(n_bins);
  int counted = 0;
  for (int i = 0; i < g.n_max; ++i) {
    if (!g.mask[i]) continue;
    const int deg = neighbor_count(g, i);
    if (deg >= n_bins)
      throw ConfigError("degree " + std::to_string(deg) +
                        " does not fit in " + std::to_string(n_bins) +
                        " bins");
    h.weights(deg) += 1.0;
    ++counted;
  }
  normalize_or_default(h, static_cast<double>(counted));
  return h;
}

StatHistogram clustering_hist(const Graph& g, int bins) {
  hogdiff::validate(g);
  if (bins < 1)
    throw ConfigError("clustering histogram needs at least one bin");
  StatHistogram h;
  h.edges = Vector::LinSpaced(bins + 1, 0.0, 1.0);
  h.weights = Vector::Zero(bins);
  int counted = 0;
  for (int i = 0; i < g.n_max; ++i) {
    if (!g.mask[i]) continue;
    std::vector<int> nbr;
    for (int j = 0; j < g.n_max; ++j)
      if (j != i && g.mask[j] && g.A(i, j) != 0.0) nbr.push_back(j);
    const int deg = static_cast<int>(nbr.size());
    double c = 0.0;
    if (deg >= 2) {
      int tri = 0;
      for (std::size_t a = 0; a < nbr.size(); ++a)
        for (std::size_t b = a + 1; b < nbr.size(); ++b)
          if (g.A(nbr[a], nbr[b]) != 0.0) ++tri;
      c = 2.0 * tri / (static_cast<double>(deg) * (deg - 1));
    }
    const int idx = std::min(static_cast<int>(c * bins), bins - 1);
    h.weights(idx) += 1.0;
    ++counted;
  }
  normalize_or_default(h, static_cast<double>(counted));
  return h;
}

IntMatrix orbit_counts(const Graph& g) {
  hogdiff::validate(g);
  const std::vector<int> keep = active_nodes(g);
  const int n = static_cast<int>(keep.size());
  if (n > 200)
    throw ConfigError("orbit counting is quartic; limited to 200 nodes");
  IntMatrix counts = IntMatrix::Zero(g.n_max, kOrbitCount);

  // Dense boolean adjacency over active nodes only.
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      adj[a][b] = a != b && g.A(keep[a], keep[b]) != 0.0;

  int id[4], deg[4];
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          id[0] = a, id[1] = b, id[2] = c, id[3] = d;
          int e = 0;
          for (int u = 0; u < 4; ++u) deg[u] = 0;
          for (int u = 0; u < 4; ++u)
            for (int v = u + 1; v < 4; ++v)
              if (adj[id[u]][id[v]]) {
                ++e;
                ++deg[u];
                ++deg[v];
              }
          if (e < 3) continue;
          auto bump = [&](int u, Orbit o) { counts(keep[id[u]], o) += 1; };
          if (e == 3) {
            int dmax = 0, dmin = 4;
            for (int u = 0; u < 4; ++u) {
              dmax = std::max(dmax, deg[u]);
              dmin = std::min(dmin, deg[u]);
            }
            if (dmin == 0) continue;  // triangle plus isolated node
            if (dmax == 3) {
              for (int u = 0; u < 4; ++u)
                bump(u, deg[u] == 3 ? orbit_star_center : orbit_star_leaf);
            } else {
              for (int u = 0; u < 4; ++u)
                bump(u, deg[u] == 1 ? orbit_path_end : orbit_path_mid);
            }
          } else if (e == 4) {
            bool all2 = true;
            for (int u = 0; u < 4; ++u) all2 = all2 && deg[u] == 2;
            if (all2) {
              for (int u = 0; u < 4; ++u) bump(u, orbit_cycle);
            } else {
              for (int u = 0; u < 4; ++u)
                bump(u, deg[u] == 1   ? orbit_paw_tail
                        : deg[u] == 3 ? orbit_paw_joint
                                      : orbit_paw_far);
            }
          } else if (e == 5) {
            for (int u = 0; u < 4; ++u)
              bump(u, deg[u] == 2 ? orbit_diamond_side : orbit_diamond_hub);
          } else {
            for (int u = 0; u < 4; ++u) bump(u, orbit_clique);
          }
        }
  return counts;
}

StatHistogram spectral_hist(const Graph& g, int bins, double range_max) {
  hogdiff::validate(g);
  if (bins < 1) throw ConfigError("spectral histogram needs at least one bin");
  if (range_max < 0.0) range_max = static_cast<double>(g.n_max);
  if (range_max <= 0.0)
    throw ConfigError("spectral histogram range must be positive");
  StatHistogram h;
  h.edges = Vector::LinSpaced(bins + 1, 0.0, range_max);
  h.weights = Vector::Zero(bins);
  const std::vector<int> keep = active_nodes(g);
  const int n = static_cast<int>(keep.size());
  if (n == 0) {
    h.weights(0) = 1.0;
    return h;
  }
  Matrix L = Matrix::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && g.A(keep[a], keep[b]) != 0.0) {
        L(a, b) = -g.A(keep[a], keep[b]);
        L(a, a) += g.A(keep[a], keep[b]);
      }
  const SpectralState s = eigendecompose(L);
  for (int i = 0; i < n; ++i) {
    // Small graphs often have rational eigenvalues sitting exactly on a bin
    // edge, and solver jitter of order 1e-15 would then bin the same
    // spectrum differently across node orders. Snapping to a 1e-9 grid
    // (far above jitter, far below any useful bin width) keeps the
    // histogram invariant under relabeling.
    const double snapped = std::nearbyint(s.lam(i) * 1e9) * 1e-9;
    const double lam = std::clamp(snapped, 0.0, range_max);
    const int idx =
        std::min(static_cast<int>(lam / range_max * bins), bins - 1);
    h.weights(idx) += 1.0;
  }
  h.weights /= static_cast<double>(n);
  return h;
}

namespace {

void require_shared_edges(const StatHistogram& a, const StatHistogram& b) {
  if (a.edges.size() != b.edges.size() || a.edges != b.edges)
    throw ConfigError("histograms must share bin edges to be compared");
}

}  // namespace

double emd_1d(const StatHistogram& a, const StatHistogram& b) {
  validate(a);
  validate(b);
  require_shared_edges(a, b);
  double cum = 0.0, dist = 0.0;
  for (int i = 0; i < a.weights.size(); ++i) {
    cum += a.weights(i) - b.weights(i);
    dist += std::abs(cum) * (a.edges(i + 1) - a.edges(i));
  }
  return dist;
}

double tv_distance(const StatHistogram& a, const StatHistogram& b) {
  validate(a);
  validate(b);
  require_shared_edges(a, b);
  return 0.5 * (a.weights - b.weights).cwiseAbs().sum();
}

const char* kernel_name(KernelKind k) {
  return k == KernelKind::gaussian_emd ? "gaussian_emd" : "gaussian_tv";
}

KernelKind kernel_from_name(const std::string& name) {
  if (name == "gaussian_emd") return KernelKind::gaussian_emd;
  if (name == "gaussian_tv") return KernelKind::gaussian_tv;
  throw ConfigError("unknown kernel \"" + name + "\"");
}

namespace {

double kernel_value(const StatHistogram& x, const StatHistogram& y,
                    const Kernel& k) {
  const double d = k.kind == KernelKind::gaussian_emd ? emd_1d(x, y)
                                                      : tv_distance(x, y);
  return std::exp(-d * d / (2.0 * k.sigma * k.sigma));
}

double mean_kernel(const std::vector<StatHistogram>& a,
                   const std::vector<StatHistogram>& b, const Kernel& k) {
  double sum = 0.0;
  for (const StatHistogram& x : a)
    for (const StatHistogram& y : b) sum += kernel_value(x, y, k);
  return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

double mmd_squared(const std::vector<StatHistogram>& a,
                   const std::vector<StatHistogram>& b, const Kernel& k) {
  if (a.empty() || b.empty())
    throw ConfigError("squared MMD needs two nonempty histogram sets");
  if (!(k.sigma > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  return mean_kernel(a, a, k) + mean_kernel(b, b, k) -
         2.0 * mean_kernel(a, b, k);
}

namespace {

std::vector<long long> orbit_totals(const Graph& g) {
  const IntMatrix counts = orbit_counts(g);
  std::vector<long long> totals;
  for (int i = 0; i < g.n_max; ++i) {
    if (!g.mask[i]) continue;
    long long t = 0;
    for (int o = 0; o < kOrbitCount; ++o) t += counts(i, o);
    totals.push_back(t);
  }
  return totals;
}

StatHistogram totals_hist(const std::vector<long long>& totals, int bins) {
  StatHistogram h = unit_bins_hist(bins);
  for (long long t : totals) h.weights(static_cast<int>(t)) += 1.0;
  normalize_or_default(h, static_cast<double>(totals.size()));
  return h;
}

}  // namespace

MMDReport eval_report(const std::vector<Graph>& generated,
                      const std::vector<Graph>& reference,
                      const EvalConfig& cfg) {
  if (generated.empty() || reference.empty())
    throw ConfigError("evaluation needs two nonempty graph sets");
  int n_common = 1;
  for (const Graph& g : generated) n_common = std::max(n_common, g.n_max);
  for (const Graph& g : reference) n_common = std::max(n_common, g.n_max);

  std::vector<StatHistogram> deg_a, deg_b, clus_a, clus_b, spec_a, spec_b;
  std::vector<std::vector<long long>> tot_a, tot_b;
  long long max_total = 0;
  auto collect = [&](const std::vector<Graph>& set,
                     std::vector<StatHistogram>& deg,
                     std::vector<StatHistogram>& clus,
                     std::vector<StatHistogram>& spec,
                     std::vector<std::vector<long long>>& tot) {
    for (const Graph& g : set) {
      deg.push_back(degree_hist(g, n_common));
      clus.push_back(clustering_hist(g, cfg.clustering_bins));
      spec.push_back(spectral_hist(g, cfg.spectral_bins,
                                   static_cast<double>(n_common)));
      tot.push_back(orbit_totals(g));
      for (long long t : tot.back()) max_total = std::max(max_total, t);
    }
  };
  collect(generated, deg_a, clus_a, spec_a, tot_a);
  collect(reference, deg_b, clus_b, spec_b, tot_b);

  const int orbit_bins = static_cast<int>(max_total) + 1;
  std::vector<StatHistogram> orb_a, orb_b;
  for (const auto& t : tot_a) orb_a.push_back(totals_hist(t, orbit_bins));
  for (const auto& t : tot_b) orb_b.push_back(totals_hist(t, orbit_bins));

  MMDReport report;
  report.kernel = cfg.kernel.kind;
  report.sigma = cfg.kernel.sigma;
  report.n_generated = generated.size();
  report.n_reference = reference.size();
  double sum = 0.0;
  auto add = [&](const char* name, const std::vector<StatHistogram>& a,
                 const std::vector<StatHistogram>& b) {
    const double v = std::max(mmd_squared(a, b, cfg.kernel), 0.0);
    report.entries.push_back({name, v});
    sum += v;
  };
  add("Deg.", deg_a, deg_b);
  add("Clus.", clus_a, clus_b);
  add("Orbit", orb_a, orb_b);
  add("Spec.", spec_a, spec_b);
  report.entries.push_back({"Avg.", sum / 4.0});
  return report;
}

std::string format_table(const MMDReport& r) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-6s  %-12s\n", "stat", "mmd2");
  out += line;
  for (const MMDEntry& e : r.entries) {
    std::snprintf(line, sizeof(line), "%-6s  %.8f\n", e.stat.c_str(), e.value);
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "kernel %s  sigma %.4f  sizes %zu/%zu\n",
                kernel_name(r.kernel), r.sigma, r.n_generated, r.n_reference);
  out += line;
  return out;
}

}  // namespace hogdiff::metrics
