#include "hogdiff/datasets.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace hogdiff::data {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

Graph er_blocks(int n, const std::vector<int>& block_of, double p_in,
                double p_out, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double p = block_of[i] == block_of[j] ? p_in : p_out;
      if (rng.uniform() < p) edges.emplace_back(i, j);
    }
  return graph_from_edges(n, edges);
}

[[noreturn]] void line_err(int line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

[[noreturn]] void line_graph_err(int line_no, const std::string& what) {
  throw InvalidGraphError("line " + std::to_string(line_no) + ": " + what);
}

long long require_int(const json& v, int line_no, const char* what) {
  if (!v.is_number_integer())
    line_err(line_no, std::string(what) + " must be an integer");
  return v.get<long long>();
}

Matrix parse_matrix(const json& rows, int n, int line_no, const char* what,
                    int forced_cols = -1) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != n)
    line_err(line_no, std::string(what) + " must hold one row per node");
  int cols = forced_cols;
  Matrix M;
  for (int i = 0; i < n; ++i) {
    const json& row = rows[i];
    if (!row.is_array())
      line_err(line_no, std::string(what) + " rows must be arrays");
    if (cols < 0) {
      cols = static_cast<int>(row.size());
      M = Matrix::Zero(n, cols);
    } else if (i == 0) {
      M = Matrix::Zero(n, cols);
    }
    if (static_cast<int>(row.size()) != cols)
      line_err(line_no, std::string(what) + " rows have inconsistent widths");
    for (int c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        line_err(line_no, std::string(what) + " entries must be numbers");
      M(i, c) = row[c].get<double>();
    }
  }
  if (cols < 0) M = Matrix::Zero(n, 0);
  return M;
}

json matrix_rows(const Matrix& M) {
  json rows = json::array();
  for (int i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json record_to_json(const DatasetRecord& rec) {
  const Graph& g = rec.graph;
  validate(g);
  for (int i = 0; i < g.n_max; ++i)
    if (!g.mask[i])
      throw ConfigError(
          "dataset records store unpadded graphs; compact() before saving");
  json edges = json::array();
  for (const auto& [i, j] : g.edge_list()) {
    const double w = g.A(i, j);
    const long long q = std::llround(w);
    if (static_cast<double>(q) != w || q == 0)
      throw ConfigError("dataset edge weights must be nonzero integers; edge (" +
                        std::to_string(i) + ", " + std::to_string(j) +
                        ") has weight " + std::to_string(w));
    edges.push_back(json::array({i, j, q}));
  }
  json out;
  out["version"] = kFormatVersion;
  out["id"] = rec.id;
  out["n"] = g.n_max;
  out["edges"] = std::move(edges);
  if (g.feature_dim() > 0) out["features"] = matrix_rows(g.X);
  if (rec.basis) {
    json basis;
    basis["U"] = matrix_rows(rec.basis->U);
    json lam = json::array();
    for (int i = 0; i < rec.basis->lam.size(); ++i)
      lam.push_back(rec.basis->lam(i));
    basis["lam"] = std::move(lam);
    out["basis"] = std::move(basis);
  }
  return out;
}

DatasetRecord record_from_json(const json& js, int line_no) {
  static const std::set<std::string> allowed = {"version", "id",       "n",
                                                "edges",   "features", "basis"};
  for (const auto& item : js.items())
    if (!allowed.count(item.key()))
      line_err(line_no, "unknown key \"" + item.key() + "\"");
  for (const char* key : {"version", "id", "n", "edges"})
    if (!js.contains(key))
      line_err(line_no, std::string("missing required key \"") + key + "\"");

  if (require_int(js["version"], line_no, "version") != kFormatVersion)
    line_err(line_no, "unsupported format version");
  if (!js["id"].is_string()) line_err(line_no, "id must be a string");
  const long long n_ll = require_int(js["n"], line_no, "n");
  if (n_ll < 1 || n_ll > 100000) line_err(line_no, "n out of range");
  const int n = static_cast<int>(n_ll);

  if (!js["edges"].is_array()) line_err(line_no, "edges must be an array");
  Matrix A = Matrix::Zero(n, n);
  for (const json& e : js["edges"]) {
    if (!e.is_array() || e.size() != 3)
      line_err(line_no, "each edge must be an [i, j, weight] triple");
    const long long i = require_int(e[0], line_no, "edge endpoint");
    const long long j = require_int(e[1], line_no, "edge endpoint");
    const long long w = require_int(e[2], line_no, "edge weight");
    if (i >= j)
      line_err(line_no, "edges must be stored canonically with i < j");
    if (i < 0 || j >= n)
      line_graph_err(line_no, "edge (" + std::to_string(i) + ", " +
                                  std::to_string(j) +
                                  ") is out of range for n = " +
                                  std::to_string(n));
    if (w == 0) line_err(line_no, "zero-weight edge");
    const int ii = static_cast<int>(i), jj = static_cast<int>(j);
    if (A(ii, jj) != 0.0)
      line_err(line_no, "duplicate edge (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
    A(ii, jj) = A(jj, ii) = static_cast<double>(w);
  }

  Matrix X = Matrix::Zero(n, 0);
  if (js.contains("features"))
    X = parse_matrix(js["features"], n, line_no, "features");

  DatasetRecord rec;
  rec.id = js["id"].get<std::string>();
  try {
    rec.graph = make_graph(n, Mask(n, 1), std::move(X), std::move(A));
  } catch (const InvalidGraphError& e) {
    line_graph_err(line_no, e.what());
  }

  if (js.contains("basis")) {
    const json& b = js["basis"];
    if (!b.is_object() || !b.contains("U") || !b.contains("lam") ||
        b.size() != 2)
      line_err(line_no, "basis must hold exactly U and lam");
    SpectralState s;
    s.U = parse_matrix(b["U"], n, line_no, "basis U", n);
    if (!b["lam"].is_array() || static_cast<int>(b["lam"].size()) != n)
      line_err(line_no, "basis lam must hold one value per node");
    s.lam = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (!b["lam"][i].is_number())
        line_err(line_no, "basis lam entries must be numbers");
      s.lam(i) = b["lam"][i].get<double>();
    }
    rec.basis = std::move(s);
  }
  return rec;
}

}  // namespace

Dataset gen_community_small(int count, Rng& rng) {
  if (count < 0) throw ConfigError("dataset count must be non-negative");
  const std::uint64_t root = rng.raw();
  Dataset ds;
  ds.reserve(static_cast<std::size_t>(count));
  for (int g = 0; g < count; ++g) {
    Rng local = Rng::stream(root, static_cast<std::uint64_t>(g));
    const int n = 12 + static_cast<int>(local.integer(9));
    const int half = (n + 1) / 2;
    std::vector<int> block_of(n);
    for (int i = 0; i < n; ++i) block_of[i] = i < half ? 0 : 1;
    Graph base = er_blocks(n, block_of, 0.7, 0.0, local);

    // Bridge the halves with ceil(n/20) distinct cross edges.
    const int bridges = (n + 19) / 20;
    Matrix A = base.A;
    std::set<std::pair<int, int>> chosen;
    while (static_cast<int>(chosen.size()) < bridges) {
      const int i = static_cast<int>(local.integer(half));
      const int j = half + static_cast<int>(local.integer(n - half));
      if (!chosen.insert({i, j}).second) continue;
      A(i, j) = A(j, i) = 1.0;
    }
    DatasetRecord rec;
    rec.id = "community_small_" + std::to_string(g);
    rec.graph = make_graph(n, Mask(n, 1), Matrix::Zero(n, 0), std::move(A));
    ds.push_back(std::move(rec));
  }
  return ds;
}

Dataset gen_sbm(int count, Rng& rng,
                std::vector<std::vector<int>>* sizes_out) {
  if (count < 0) throw ConfigError("dataset count must be non-negative");
  const std::uint64_t root = rng.raw();
  if (sizes_out) sizes_out->clear();
  Dataset ds;
  ds.reserve(static_cast<std::size_t>(count));
  for (int g = 0; g < count; ++g) {
    Rng local = Rng::stream(root, static_cast<std::uint64_t>(g));
    const int k = 2 + static_cast<int>(local.integer(4));
    std::vector<int> sizes(k);
    int n = 0;
    for (int c = 0; c < k; ++c) {
      sizes[c] = 20 + static_cast<int>(local.integer(21));
      n += sizes[c];
    }
    std::vector<int> block_of;
    block_of.reserve(static_cast<std::size_t>(n));
    for (int c = 0; c < k; ++c)
      block_of.insert(block_of.end(), sizes[c], c);
    DatasetRecord rec;
    rec.id = "sbm_" + std::to_string(g);
    rec.graph = er_blocks(n, block_of, 0.3, 0.05, local);
    ds.push_back(std::move(rec));
    if (sizes_out) sizes_out->push_back(std::move(sizes));
  }
  return ds;
}

void save(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  for (const DatasetRecord& rec : ds) out << record_to_json(rec).dump() << '\n';
  out.flush();
  if (!out) throw ConfigError("write to " + path + " failed");
}

Dataset load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json js;
    try {
      js = json::parse(line);
    } catch (const json::parse_error& e) {
      line_err(line_no, e.what());
    }
    if (!js.is_object()) line_err(line_no, "record must be a JSON object");
    ds.push_back(record_from_json(js, line_no));
  }
  return ds;
}

Graph compact(const Graph& g) {
  validate(g);
  std::vector<int> keep;
  for (int i = 0; i < g.n_max; ++i)
    if (g.mask[i]) keep.push_back(i);
  const int n = static_cast<int>(keep.size());
  Matrix X(n, g.feature_dim());
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    X.row(i) = g.X.row(keep[i]);
    for (int j = 0; j < n; ++j) A(i, j) = g.A(keep[i], keep[j]);
  }
  return make_graph(n, Mask(n, 1), std::move(X), std::move(A));
}

Matrix default_features(const Graph& g, FeatureMode mode, int cap, int k) {
  validate(g);
  if (cap < 1) throw ConfigError("degree one-hot cap must be at least 1");
  const bool spectral = mode == FeatureMode::degree_plus_spectral;
  if (spectral && k < 1)
    throw ConfigError("spectral feature count must be at least 1");
  const int d = cap + (spectral ? k : 0);
  Matrix F = Matrix::Zero(g.n_max, d);
  for (int i = 0; i < g.n_max; ++i) {
    if (!g.mask[i]) continue;
    int deg = 0;
    for (int j = 0; j < g.n_max; ++j)
      if (j != i && g.mask[j] && g.A(i, j) != 0.0) ++deg;
    F(i, std::min(deg, cap - 1)) = 1.0;
  }
  if (spectral) {
    std::vector<int> keep;
    for (int i = 0; i < g.n_max; ++i)
      if (g.mask[i]) keep.push_back(i);
    if (!keep.empty()) {
      if (k > static_cast<int>(keep.size()))
        throw ConfigError("spectral feature count exceeds active node count");
      const SpectralState s = eigendecompose(laplacian(compact(g)));
      for (int i = 0; i < static_cast<int>(keep.size()); ++i)
        for (int c = 0; c < k; ++c) F(keep[i], cap + c) = s.U(i, c);
    }
  }
  return F;
}

}  // namespace hogdiff::data
