#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hogdiff/metrics.hpp"
#include "hogdiff/spectral.hpp"
#include "test_support.hpp"

using namespace hogdiff;
using namespace hogdiff::metrics;

namespace {

// Independent orbit computation: classify every 4-subset by explicit
// isomorphism search against labeled reference graphlets (all 24 node
// relabelings), instead of the library's degree-sequence logic.
struct RefGraphlet {
  std::vector<std::pair<int, int>> edges;
  int orbit[4];
};

const std::vector<RefGraphlet>& reference_graphlets() {
  static const std::vector<RefGraphlet> refs = {
      {{{0, 1}, {1, 2}, {2, 3}},
       {orbit_path_end, orbit_path_mid, orbit_path_mid, orbit_path_end}},
      {{{0, 1}, {0, 2}, {0, 3}},
       {orbit_star_center, orbit_star_leaf, orbit_star_leaf, orbit_star_leaf}},
      {{{0, 1}, {1, 2}, {2, 3}, {0, 3}},
       {orbit_cycle, orbit_cycle, orbit_cycle, orbit_cycle}},
      {{{0, 1}, {0, 2}, {1, 2}, {2, 3}},
       {orbit_paw_far, orbit_paw_far, orbit_paw_joint, orbit_paw_tail}},
      {{{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}},
       {orbit_diamond_side, orbit_diamond_side, orbit_diamond_hub,
        orbit_diamond_hub}},
      {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}},
       {orbit_clique, orbit_clique, orbit_clique, orbit_clique}},
  };
  return refs;
}

IntMatrix orbit_oracle(const Graph& g) {
  std::vector<int> keep;
  for (int i = 0; i < g.n_max; ++i)
    if (g.mask[i]) keep.push_back(i);
  IntMatrix counts = IntMatrix::Zero(g.n_max, kOrbitCount);
  std::vector<int> perm{0, 1, 2, 3};
  const int n = static_cast<int>(keep.size());
  int s[4];
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          s[0] = keep[a], s[1] = keep[b], s[2] = keep[c], s[3] = keep[d];
          bool local[4][4] = {};
          for (int u = 0; u < 4; ++u)
            for (int v = 0; v < 4; ++v)
              local[u][v] = u != v && g.A(s[u], s[v]) != 0.0;
          bool matched = false;
          for (const RefGraphlet& ref : reference_graphlets()) {
            bool radj[4][4] = {};
            for (const auto& [i, j] : ref.edges)
              radj[i][j] = radj[j][i] = true;
            std::sort(perm.begin(), perm.end());
            do {
              bool ok = true;
              for (int u = 0; u < 4 && ok; ++u)
                for (int v = u + 1; v < 4 && ok; ++v)
                  ok = local[u][v] == radj[perm[u]][perm[v]];
              if (ok) {
                for (int u = 0; u < 4; ++u)
                  counts(s[u], ref.orbit[perm[u]]) += 1;
                matched = true;
                break;
              }
            } while (std::next_permutation(perm.begin(), perm.end()));
            if (matched) break;
          }
        }
  return counts;
}

// W1 between the histograms viewed as point masses at bin centers, by
// sweeping the sorted support and integrating the CDF gap. Valid for the
// uniform-width bins every statistic here produces.
double emd_oracle(const StatHistogram& a, const StatHistogram& b) {
  const int bins = static_cast<int>(a.weights.size());
  std::vector<double> centers(bins);
  for (int k = 0; k < bins; ++k)
    centers[k] = 0.5 * (a.edges(k) + a.edges(k + 1));
  double cum = 0.0, dist = 0.0;
  for (int k = 0; k + 1 < bins; ++k) {
    cum += a.weights(k) - b.weights(k);
    dist += std::abs(cum) * (centers[k + 1] - centers[k]);
  }
  return dist;
}

StatHistogram random_hist(int bins, double width, std::uint64_t seed) {
  Rng rng(seed);
  StatHistogram h;
  h.edges = Vector::LinSpaced(bins + 1, 0.0, width * bins);
  h.weights = Vector::Zero(bins);
  double total = 0.0;
  for (int k = 0; k < bins; ++k) {
    h.weights(k) = rng.uniform();
    total += h.weights(k);
  }
  h.weights /= total;
  return h;
}

StatHistogram point_mass(int bins, int at) {
  StatHistogram h;
  h.edges = Vector::LinSpaced(bins + 1, 0.0, static_cast<double>(bins));
  h.weights = Vector::Zero(bins);
  h.weights(at) = 1.0;
  return h;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("degree histogram on canonical graphs") {
  const StatHistogram k3 = degree_hist(testsupport::complete_graph(3));
  CHECK(k3.weights.size() == 3);
  CHECK(k3.weights(2) == 1.0);
  validate(k3);

  const StatHistogram s4 = degree_hist(testsupport::star_graph(3));
  CHECK(s4.weights(1) == 0.75);
  CHECK(s4.weights(3) == 0.25);

  // No active nodes: all mass in bin 0.
  Graph empty = testsupport::path_graph(3, 3);
  empty.mask = Mask(3, 0);
  empty.A.setZero();
  const StatHistogram he = degree_hist(empty);
  CHECK(he.weights(0) == 1.0);

  CHECK_THROWS_AS(degree_hist(testsupport::complete_graph(3), 2), ConfigError);
}

TEST_CASE("degree histogram matches a row-sum recount") {
  const Graph g = testsupport::er_graph(11, 0.4, 321);
  const StatHistogram h = degree_hist(g);
  Vector recount = Vector::Zero(g.n_max);
  for (int i = 0; i < g.n_max; ++i) {
    int deg = 0;
    for (int j = 0; j < g.n_max; ++j) deg += g.A(i, j) != 0.0 ? 1 : 0;
    recount(deg) += 1.0;
  }
  recount /= recount.sum();
  CHECK((h.weights - recount).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("clustering histogram endpoints") {
  const StatHistogram k3 = clustering_hist(testsupport::complete_graph(3), 10);
  CHECK(k3.weights(9) == 1.0);  // coefficient exactly 1 lands in the top bin
  const StatHistogram s = clustering_hist(testsupport::star_graph(4), 10);
  CHECK(s.weights(0) == 1.0);
  validate(s);
}

TEST_CASE("clustering histogram matches a triangle-enumeration oracle") {
  // Four-clique minus one edge: two nodes at coefficient 1, two at 2/3.
  const Graph dia =
      graph_from_edges(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  std::vector<double> coeffs;
  for (int i = 0; i < 4; ++i) {
    std::vector<int> nbr;
    for (int j = 0; j < 4; ++j)
      if (j != i && dia.A(i, j) != 0.0) nbr.push_back(j);
    int tri = 0;
    for (std::size_t a = 0; a < nbr.size(); ++a)
      for (std::size_t b = a + 1; b < nbr.size(); ++b)
        if (dia.A(nbr[a], nbr[b]) != 0.0) ++tri;
    const int deg = static_cast<int>(nbr.size());
    coeffs.push_back(deg < 2 ? 0.0 : 2.0 * tri / (deg * (deg - 1.0)));
  }
  std::sort(coeffs.begin(), coeffs.end());
  CHECK(coeffs[0] == 2.0 / 3.0);
  CHECK(coeffs[1] == 2.0 / 3.0);
  CHECK(coeffs[2] == 1.0);
  CHECK(coeffs[3] == 1.0);
  for (int bins : {10, 30}) {
    const StatHistogram h = clustering_hist(dia, bins);
    Vector manual = Vector::Zero(bins);
    for (double c : coeffs)
      manual(std::min(static_cast<int>(c * bins), bins - 1)) += 0.25;
    CHECK((h.weights - manual).cwiseAbs().maxCoeff() == 0.0);
  }
  // And on a random graph, against the same by-hand binning.
  const Graph g = testsupport::er_graph(10, 0.5, 9);
  const StatHistogram h = clustering_hist(g, 25);
  validate(h);
}

TEST_CASE("orbit counts on each pure graphlet") {
  const IntMatrix k4 = orbit_counts(testsupport::complete_graph(4));
  for (int i = 0; i < 4; ++i)
    for (int o = 0; o < kOrbitCount; ++o)
      CHECK(k4(i, o) == (o == orbit_clique ? 1 : 0));

  const IntMatrix p4 = orbit_counts(testsupport::path_graph(4));
  CHECK(p4(0, orbit_path_end) == 1);
  CHECK(p4(3, orbit_path_end) == 1);
  CHECK(p4(1, orbit_path_mid) == 1);
  CHECK(p4(2, orbit_path_mid) == 1);
  CHECK(p4.sum() == 4);

  const IntMatrix st = orbit_counts(testsupport::star_graph(3));
  CHECK(st(0, orbit_star_center) == 1);
  for (int i = 1; i < 4; ++i) CHECK(st(i, orbit_star_leaf) == 1);

  const IntMatrix c4 = orbit_counts(testsupport::cycle_graph(4));
  for (int i = 0; i < 4; ++i) CHECK(c4(i, orbit_cycle) == 1);

  const IntMatrix paw =
      orbit_counts(graph_from_edges(4, {{0, 1}, {0, 2}, {1, 2}, {2, 3}}));
  CHECK(paw(3, orbit_paw_tail) == 1);
  CHECK(paw(2, orbit_paw_joint) == 1);
  CHECK(paw(0, orbit_paw_far) == 1);
  CHECK(paw(1, orbit_paw_far) == 1);

  const IntMatrix dia = orbit_counts(
      graph_from_edges(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
  CHECK(dia(0, orbit_diamond_side) == 1);
  CHECK(dia(1, orbit_diamond_side) == 1);
  CHECK(dia(2, orbit_diamond_hub) == 1);
  CHECK(dia(3, orbit_diamond_hub) == 1);

  // Triangle plus isolated node is disconnected: no orbits at all.
  const IntMatrix tri =
      orbit_counts(graph_from_edges(4, {{0, 1}, {0, 2}, {1, 2}}));
  CHECK(tri.sum() == 0);
}

TEST_CASE("orbit brute force agrees with the isomorphism-search oracle") {
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 4 + static_cast<int>(rng.integer(9));
    const double p = 0.2 + 0.6 * rng.uniform();
    const Graph g = testsupport::er_graph(n, p, 9000 + trial);
    const IntMatrix got = orbit_counts(g);
    const IntMatrix want = orbit_oracle(g);
    CHECK(got == want);
  }
  // Padded graphs keep masked rows at zero and match their compact form.
  const Graph padded = testsupport::er_graph(7, 0.5, 55, 10);
  const IntMatrix got = orbit_counts(padded);
  CHECK(got == orbit_oracle(padded));
  for (int i = 7; i < 10; ++i)
    for (int o = 0; o < kOrbitCount; ++o) CHECK(got(i, o) == 0);
}

TEST_CASE("orbit counting refuses oversized graphs") {
  const int n = 201;
  const Graph big = make_graph(n, Mask(n, 1), Matrix::Zero(n, 0),
                               Matrix::Zero(n, n));
  CHECK_THROWS_AS(orbit_counts(big), ConfigError);
}

TEST_CASE("spectral histogram of a complete graph splits 1:2") {
  const StatHistogram h = spectral_hist(testsupport::complete_graph(3), 3);
  CHECK(h.weights(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(h.weights(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(h.weights(1) == 0.0);

  const StatHistogram e = spectral_hist(graph_from_edges(4, {}), 8);
  CHECK(e.weights(0) == 1.0);
}

TEST_CASE("spectral histogram respects the trace identity") {
  const Graph g = testsupport::er_graph(9, 0.45, 12);
  const SpectralState s = eigendecompose(laplacian(g));
  double degsum = 0.0;
  for (int i = 0; i < g.n_max; ++i) degsum += g.A.row(i).sum();
  CHECK(s.lam.sum() == doctest::Approx(degsum).epsilon(1e-10));
  // The histogram is exactly the hand-binning of those eigenvalues.
  const int bins = 18;
  const StatHistogram h = spectral_hist(g, bins);
  Vector manual = Vector::Zero(bins);
  const double range = static_cast<double>(g.n_max);
  for (int i = 0; i < s.lam.size(); ++i) {
    const double snapped = std::nearbyint(s.lam(i) * 1e9) * 1e-9;
    const double lam = std::clamp(snapped, 0.0, range);
    manual(std::min(static_cast<int>(lam / range * bins), bins - 1)) += 1.0;
  }
  manual /= manual.sum();
  CHECK((h.weights - manual).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("earth mover distance basics") {
  const StatHistogram a = random_hist(12, 1.0, 5);
  CHECK(emd_1d(a, a) == 0.0);
  for (int k : {1, 4, 11})
    CHECK(emd_1d(point_mass(12, 0), point_mass(12, k)) ==
          doctest::Approx(static_cast<double>(k)).epsilon(1e-12));
  StatHistogram other = random_hist(13, 1.0, 6);
  CHECK_THROWS_AS(emd_1d(a, other), ConfigError);
  StatHistogram shifted = random_hist(12, 0.5, 7);
  CHECK_THROWS_AS(emd_1d(a, shifted), ConfigError);
}

TEST_CASE("earth mover distance matches the transport oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double width = seed % 2 ? 1.0 : 0.25;
    const StatHistogram a = random_hist(15, width, 100 + seed);
    const StatHistogram b = random_hist(15, width, 200 + seed);
    CHECK(emd_1d(a, b) == doctest::Approx(emd_oracle(a, b)).epsilon(1e-12));
    CHECK(emd_1d(a, b) == doctest::Approx(emd_1d(b, a)).epsilon(1e-15));
  }
}

TEST_CASE("total variation is half the L1 gap") {
  const StatHistogram a = point_mass(4, 0), b = point_mass(4, 3);
  CHECK(tv_distance(a, b) == 1.0);
  CHECK(tv_distance(a, a) == 0.0);
  StatHistogram c = a;
  c.weights << 0.5, 0.5, 0.0, 0.0;
  CHECK(tv_distance(a, c) == 0.5);
}

TEST_CASE("squared MMD identities") {
  std::vector<StatHistogram> A, B;
  for (std::uint64_t s = 0; s < 4; ++s) A.push_back(random_hist(10, 1.0, s));
  for (std::uint64_t s = 4; s < 9; ++s) B.push_back(random_hist(10, 1.0, s));
  for (KernelKind kind : {KernelKind::gaussian_emd, KernelKind::gaussian_tv}) {
    const Kernel k{kind, 1.0};
    CHECK(mmd_squared(A, A, k) == 0.0);  // biased estimator, exactly
    const double ab = mmd_squared(A, B, k);
    const double ba = mmd_squared(B, A, k);
    CHECK(std::abs(ab - ba) <= 1e-15);
    CHECK(ab >= -1e-12);
  }
  // Two singletons expand to 2 - 2 k(x, y).
  const StatHistogram x = point_mass(6, 1), y = point_mass(6, 4);
  const Kernel k{KernelKind::gaussian_emd, 1.5};
  const double d = emd_1d(x, y);
  CHECK(mmd_squared({x}, {y}, k) ==
        doctest::Approx(2.0 - 2.0 * std::exp(-d * d / (2.0 * 1.5 * 1.5)))
            .epsilon(1e-14));
  CHECK_THROWS_AS(mmd_squared({}, {x}, k), ConfigError);
  CHECK_THROWS_AS(
      mmd_squared({x}, {y}, Kernel{KernelKind::gaussian_emd, 0.0}),
      ConfigError);
}

TEST_CASE("kernel names round-trip") {
  CHECK(kernel_from_name("gaussian_emd") == KernelKind::gaussian_emd);
  CHECK(kernel_from_name("gaussian_tv") == KernelKind::gaussian_tv);
  CHECK(std::string(kernel_name(KernelKind::gaussian_tv)) == "gaussian_tv");
  CHECK_THROWS_AS(kernel_from_name("rbf"), ConfigError);
}

TEST_CASE("statistics are node-order invariant") {
  Rng rng(2);
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const Graph g = testsupport::er_graph(8, 0.45, 700 + trial);
    const auto pi = testsupport::random_permutation(8, 800 + trial);
    const Graph gp = permute(g, pi);
    CHECK((degree_hist(g).weights - degree_hist(gp).weights)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((clustering_hist(g, 20).weights - clustering_hist(gp, 20).weights)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((spectral_hist(g, 16).weights - spectral_hist(gp, 16).weights)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    const IntMatrix oa = orbit_counts(g), ob = orbit_counts(gp);
    for (int i = 0; i < 8; ++i)
      for (int o = 0; o < kOrbitCount; ++o) CHECK(ob(pi[i], o) == oa(i, o));
  }
}

TEST_CASE("evaluation report on identical and disjoint sets") {
  std::vector<Graph> k3s(5, testsupport::complete_graph(3));
  std::vector<Graph> stars(5, testsupport::star_graph(3));

  const MMDReport same = eval_report(k3s, k3s);
  REQUIRE(same.entries.size() == 5);
  const char* names[5] = {"Deg.", "Clus.", "Orbit", "Spec.", "Avg."};
  for (int i = 0; i < 5; ++i) {
    CHECK(same.entries[i].stat == names[i]);
    CHECK(same.entries[i].value == 0.0);
  }
  CHECK(same.n_generated == 5);
  CHECK(same.n_reference == 5);

  // Hand expansion for the degree statistic: on shared 4-wide unit bins the
  // degree histograms are [0,0,1,0] and [0,3/4,0,1/4], EMD 1.0, and each
  // set is internally identical, so MMD^2 = 2 - 2 exp(-1/2).
  const MMDReport rep = eval_report(k3s, stars);
  const double want = 2.0 - 2.0 * std::exp(-0.5);
  CHECK(rep.entries[0].value == doctest::Approx(want).epsilon(1e-12));
  CHECK(rep.entries[0].value > 0.5);
  const double avg = (rep.entries[0].value + rep.entries[1].value +
                      rep.entries[2].value + rep.entries[3].value) /
                     4.0;
  CHECK(rep.entries[4].value == avg);
  CHECK_THROWS_AS(eval_report({}, k3s), ConfigError);

  const std::string table = format_table(rep);
  for (const char* n : names) CHECK(table.find(n) != std::string::npos);
  CHECK(table.find("gaussian_emd") != std::string::npos);
}

}  // TEST_SUITE
