#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hogdiff/datasets.hpp"
#include "test_support.hpp"

using namespace hogdiff;
using namespace hogdiff::data;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// Loads a single hand-written record line preceded by one valid record, so
// failures must report "line 2".
Dataset load_line2(const std::string& line) {
  const std::string path = "/tmp/hogdiff_ds_line2.jsonl";
  write_file(path,
             "{\"edges\":[[0,1,1]],\"id\":\"ok\",\"n\":2,\"version\":1}\n" +
                 line + "\n");
  Dataset ds = load(path);
  std::remove(path.c_str());
  return ds;
}

bool graphs_equal(const Graph& a, const Graph& b) {
  return a.n_max == b.n_max && a.mask == b.mask && a.X == b.X && a.A == b.A;
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("community graphs have the advertised shape") {
  Rng rng(2024);
  const Dataset ds = gen_community_small(60, rng);
  REQUIRE(ds.size() == 60);
  for (const auto& rec : ds) {
    const int n = rec.graph.n_max;
    CHECK(n >= 12);
    CHECK(n <= 20);
    CHECK(rec.graph.active_count() == n);
    CHECK_NOTHROW(validate(rec.graph));
    // Exactly ceil(n/20) bridges between the two halves.
    const int half = (n + 1) / 2;
    int cross = 0;
    for (const auto& [i, j] : rec.graph.edge_list())
      if (i < half && j >= half) ++cross;
    CHECK(cross == (n + 19) / 20);
  }
  CHECK(ds[0].id == "community_small_0");
  CHECK(ds[59].id == "community_small_59");
}

TEST_CASE("community intra-density matches the wiring probability") {
  Rng rng(7);
  const Dataset ds = gen_community_small(500, rng);
  double density_sum = 0.0;
  for (const auto& rec : ds) {
    const int n = rec.graph.n_max;
    const int half = (n + 1) / 2;
    int intra = 0;
    for (const auto& [i, j] : rec.graph.edge_list())
      if ((i < half) == (j < half)) ++intra;
    const int pairs = half * (half - 1) / 2 + (n - half) * (n - half - 1) / 2;
    density_sum += static_cast<double>(intra) / pairs;
  }
  const double mean_density = density_sum / 500.0;
  CHECK(std::abs(mean_density - 0.7) <= 0.03);
}

TEST_CASE("block-model community counts and densities") {
  Rng rng(99);
  std::vector<std::vector<int>> sizes;
  const Dataset ds = gen_sbm(200, rng, &sizes);
  REQUIRE(sizes.size() == 200);
  long long intra_edges = 0, intra_pairs = 0, inter_edges = 0, inter_pairs = 0;
  for (std::size_t g = 0; g < ds.size(); ++g) {
    const auto& sz = sizes[g];
    CHECK(sz.size() >= 2);
    CHECK(sz.size() <= 5);
    int n = 0;
    for (int c : sz) {
      CHECK(c >= 20);
      CHECK(c <= 40);
      n += c;
      intra_pairs += static_cast<long long>(c) * (c - 1) / 2;
    }
    REQUIRE(ds[g].graph.n_max == n);
    CHECK_NOTHROW(validate(ds[g].graph));
    // Recover the block of each node from the contiguous layout.
    std::vector<int> block_of;
    for (std::size_t c = 0; c < sz.size(); ++c)
      block_of.insert(block_of.end(), sz[c], static_cast<int>(c));
    for (const auto& [i, j] : ds[g].graph.edge_list())
      (block_of[i] == block_of[j] ? intra_edges : inter_edges) += 1;
    inter_pairs += static_cast<long long>(n) * (n - 1) / 2;
  }
  inter_pairs -= intra_pairs;
  const double intra_density =
      static_cast<double>(intra_edges) / static_cast<double>(intra_pairs);
  const double inter_density =
      static_cast<double>(inter_edges) / static_cast<double>(inter_pairs);
  CHECK(std::abs(intra_density - 0.3) <= 0.02);
  CHECK(std::abs(inter_density - 0.05) <= 0.01);
}

TEST_CASE("generators are pure functions of the seed") {
  Rng a(5), b(5), c(6);
  const Dataset da = gen_community_small(8, a);
  const Dataset db = gen_community_small(8, b);
  const Dataset dc = gen_community_small(8, c);
  REQUIRE(da.size() == db.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < da.size(); ++i) {
    CHECK(graphs_equal(da[i].graph, db[i].graph));
    if (da[i].graph.n_max != dc[i].graph.n_max ||
        da[i].graph.A != dc[i].graph.A)
      any_diff = true;
  }
  CHECK(any_diff);

  Rng s1(5), s2(5);
  const Dataset e1 = gen_sbm(3, s1), e2 = gen_sbm(3, s2);
  for (std::size_t i = 0; i < e1.size(); ++i)
    CHECK(graphs_equal(e1[i].graph, e2[i].graph));
}

TEST_CASE("save then load round-trips and a second save is byte-identical") {
  Rng rng(31);
  Dataset ds = gen_community_small(10, rng);
  // Exercise the optional fields on a couple of records.
  ds[0].graph.X = Matrix::Zero(ds[0].graph.n_max, 3);
  ds[0].graph.X(0, 0) = 0.1;  // not exactly representable in binary
  ds[0].graph.X(1, 2) = -2.75;
  ds[1].basis = eigendecompose(laplacian(ds[1].graph));

  const std::string p1 = "/tmp/hogdiff_ds_rt1.jsonl";
  const std::string p2 = "/tmp/hogdiff_ds_rt2.jsonl";
  save(ds, p1);
  const Dataset back = load(p1);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].id == ds[i].id);
    CHECK(graphs_equal(back[i].graph, ds[i].graph));
    CHECK(back[i].basis.has_value() == ds[i].basis.has_value());
  }
  CHECK(back[1].basis->U == ds[1].basis->U);
  CHECK(back[1].basis->lam == ds[1].basis->lam);
  save(back, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("multi-level edge weights survive the file format exactly") {
  const int n = 4;
  Matrix A = Matrix::Zero(n, n);
  A(0, 1) = A(1, 0) = 1.0;
  A(1, 2) = A(2, 1) = 2.0;
  A(2, 3) = A(3, 2) = 3.0;
  Dataset ds{{"mol", make_graph(n, Mask(n, 1), Matrix::Zero(n, 0), A), {}}};
  const std::string path = "/tmp/hogdiff_ds_mol.jsonl";
  save(ds, path);
  const Dataset back = load(path);
  CHECK(back[0].graph.A == A);
  std::remove(path.c_str());
}

TEST_CASE("saving rejects padded graphs and fractional weights") {
  const Graph padded = testsupport::path_graph(3, 5);
  CHECK_THROWS_AS(save({{"p", padded, {}}}, "/tmp/hogdiff_ds_bad1.jsonl"),
                  ConfigError);
  Matrix A = Matrix::Zero(2, 2);
  A(0, 1) = A(1, 0) = 0.5;
  const Graph frac = make_graph(2, Mask(2, 1), Matrix::Zero(2, 0), A);
  CHECK_THROWS_AS(save({{"f", frac, {}}}, "/tmp/hogdiff_ds_bad2.jsonl"),
                  ConfigError);
}

TEST_CASE("malformed lines are reported by number") {
  CHECK_THROWS_WITH_AS(load_line2("{\"truncated"), doctest::Contains("line 2"),
                       ParseError);
  CHECK_THROWS_WITH_AS(load_line2("[1,2,3]"), doctest::Contains("line 2"),
                       ParseError);
  CHECK_THROWS_WITH_AS(
      load_line2("{\"edges\":[],\"id\":\"x\",\"n\":2,\"version\":9}"),
      doctest::Contains("version"), ParseError);
  CHECK_THROWS_WITH_AS(
      load_line2("{\"edges\":[],\"id\":\"x\",\"version\":1}"),
      doctest::Contains("missing"), ParseError);
  CHECK_THROWS_WITH_AS(
      load_line2(
          "{\"edges\":[],\"id\":\"x\",\"n\":2,\"version\":1,\"extra\":0}"),
      doctest::Contains("unknown key"), ParseError);
}

TEST_CASE("edge validation on load") {
  // Duplicate edge.
  CHECK_THROWS_WITH_AS(
      load_line2(
          "{\"edges\":[[0,1,1],[0,1,1]],\"id\":\"x\",\"n\":3,\"version\":1}"),
      doctest::Contains("duplicate"), ParseError);
  // Non-canonical order and self loops.
  CHECK_THROWS_WITH_AS(
      load_line2("{\"edges\":[[1,0,1]],\"id\":\"x\",\"n\":3,\"version\":1}"),
      doctest::Contains("i < j"), ParseError);
  CHECK_THROWS_WITH_AS(
      load_line2("{\"edges\":[[1,1,1]],\"id\":\"x\",\"n\":3,\"version\":1}"),
      doctest::Contains("i < j"), ParseError);
  // Out-of-range index is a graph validation failure, not a syntax one.
  CHECK_THROWS_WITH_AS(
      load_line2("{\"edges\":[[0,7,1]],\"id\":\"x\",\"n\":3,\"version\":1}"),
      doctest::Contains("line 2"), InvalidGraphError);
  // Zero weight would vanish on re-save.
  CHECK_THROWS_WITH_AS(
      load_line2("{\"edges\":[[0,1,0]],\"id\":\"x\",\"n\":3,\"version\":1}"),
      doctest::Contains("zero"), ParseError);
  // Fractional weight.
  CHECK_THROWS_AS(
      load_line2("{\"edges\":[[0,1,1.5]],\"id\":\"x\",\"n\":3,\"version\":1}"),
      ParseError);
  CHECK_THROWS_AS(load("/tmp/hogdiff_no_such_file.jsonl"), ParseError);
}

TEST_CASE("blank lines are tolerated") {
  const std::string path = "/tmp/hogdiff_ds_blank.jsonl";
  write_file(path,
             "\n{\"edges\":[[0,1,1]],\"id\":\"a\",\"n\":2,\"version\":1}\n"
             "   \n{\"edges\":[],\"id\":\"b\",\"n\":1,\"version\":1}\n");
  const Dataset ds = load(path);
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].id == "a");
  CHECK(ds[1].graph.n_max == 1);
  std::remove(path.c_str());
}

TEST_CASE("compacting keeps active nodes in order") {
  Matrix A = Matrix::Zero(3, 3);
  A(0, 2) = A(2, 0) = 2.0;
  Matrix X = Matrix::Zero(3, 1);
  X(0, 0) = 5.0;
  X(2, 0) = 7.0;
  const Graph g = make_graph(3, Mask{1, 0, 1}, X, A);
  const Graph c = compact(g);
  CHECK(c.n_max == 2);
  CHECK(c.active_count() == 2);
  CHECK(c.A(0, 1) == 2.0);
  CHECK(c.X(0, 0) == 5.0);
  CHECK(c.X(1, 0) == 7.0);
}

TEST_CASE("degree one-hot features") {
  const Graph k3 = testsupport::complete_graph(3);
  const Matrix F = default_features(k3, FeatureMode::degree_onehot, 4);
  CHECK(F.rows() == 3);
  CHECK(F.cols() == 4);
  for (int i = 0; i < 3; ++i) {
    CHECK(F(i, 2) == 1.0);
    CHECK(F.row(i).sum() == 1.0);
  }
  // Degrees at or above the cap clip into the last slot.
  const Graph star = testsupport::star_graph(5);
  const Matrix Fs = default_features(star, FeatureMode::degree_onehot, 4);
  CHECK(Fs(0, 3) == 1.0);  // center has degree 5
  for (int i = 1; i <= 5; ++i) CHECK(Fs(i, 1) == 1.0);
  // Masked rows stay zero, and padding does not shift anything.
  const Graph padded = testsupport::path_graph(3, 6);
  const Matrix Fp = default_features(padded, FeatureMode::degree_onehot, 4);
  for (int i = 3; i < 6; ++i) CHECK(Fp.row(i).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Fp(0, 1) == 1.0);
  CHECK(Fp(1, 2) == 1.0);
}

TEST_CASE("spectral features extend the dimension and ignore padding") {
  const Graph p4 = testsupport::path_graph(4);
  const Matrix F = default_features(p4, FeatureMode::degree_plus_spectral, 4, 2);
  CHECK(F.cols() == 6);
  // First eigenvector of a connected Laplacian is constant 1/sqrt(n).
  for (int i = 0; i < 4; ++i)
    CHECK(F(i, 4) == doctest::Approx(0.5).epsilon(1e-10));
  // Padding the same graph reproduces the same rows.
  const Graph p4pad = testsupport::path_graph(4, 7);
  const Matrix Fp =
      default_features(p4pad, FeatureMode::degree_plus_spectral, 4, 2);
  for (int i = 0; i < 4; ++i)
    CHECK((F.row(i) - Fp.row(i)).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 4; i < 7; ++i) CHECK(Fp.row(i).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(default_features(p4, FeatureMode::degree_plus_spectral, 4, 9),
                  ConfigError);
  CHECK_THROWS_AS(default_features(p4, FeatureMode::degree_onehot, 0),
                  ConfigError);
}

TEST_CASE("feature rows follow node relabelings") {
  // Triangle with a two-edge tail. Its first three Laplacian eigenvectors
  // have well-separated entry magnitudes (the constant vector's tie is
  // sign-uniform), so the deterministic sign rule picks the same sign in any
  // node order and the rows genuinely follow permutations. Symmetric graphs
  // like paths tie |entries| across the mirror and would flip signs here.
  const Graph g =
      graph_from_edges(5, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}});
  const Matrix F = default_features(g, FeatureMode::degree_plus_spectral, 4, 3);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto pi = testsupport::random_permutation(5, 400 + trial);
    const Graph gp = permute(g, pi);
    const Matrix Fp =
        default_features(gp, FeatureMode::degree_plus_spectral, 4, 3);
    for (int i = 0; i < 5; ++i)
      CHECK((Fp.row(pi[i]) - F.row(i)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  // Degree one-hots relabel exactly.
  Rng rng(17);
  const Graph h = testsupport::er_graph(9, 0.4, 23);
  const Matrix Fh = default_features(h, FeatureMode::degree_onehot, 6);
  const auto pi = testsupport::random_permutation(9, 77);
  const Matrix Fhp = default_features(permute(h, pi), FeatureMode::degree_onehot, 6);
  for (int i = 0; i < 9; ++i)
    CHECK((Fhp.row(pi[i]) - Fh.row(i)).cwiseAbs().maxCoeff() == 0.0);
}

}  // TEST_SUITE
