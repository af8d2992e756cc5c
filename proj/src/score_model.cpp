#include "hogdiff/score_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace hogdiff::score {

namespace {

double act_value(double x, Activation a) {
  if (a == Activation::relu) return x > 0.0 ? x : 0.0;
  return x / (1.0 + std::exp(-x));  // silu
}

double act_deriv(double x, Activation a) {
  if (a == Activation::relu) return x > 0.0 ? 1.0 : 0.0;
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

Matrix act_mat(const Matrix& v, Activation a) {
  return v.unaryExpr([a](double x) { return act_value(x, a); });
}

Matrix act_deriv_mat(const Matrix& v, Activation a) {
  return v.unaryExpr([a](double x) { return act_deriv(x, a); });
}

Matrix colsum(const Matrix& m) { return m.colwise().sum(); }

// Binarized adjacency restricted to active nodes, diagonal excluded.
Matrix binarize(const Matrix& A, const Mask& mask) {
  const int n = static_cast<int>(A.rows());
  Matrix B = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    for (int j = 0; j < n; ++j) {
      if (i == j || !mask[j]) continue;
      if (std::abs(A(i, j)) > 0.5) B(i, j) = 1.0;
    }
  }
  return B;
}

// One-hot truncated BFS distances of the binarized graph; channel k holds
// pairs at distance k+1, with >= cutoff and unreachable clipped into the
// last channel.
std::vector<Matrix> sp_channels(const Matrix& A, const Mask& mask, int cutoff) {
  const int n = static_cast<int>(A.rows());
  const Matrix B = binarize(A, mask);
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (B(i, j) > 0.0) adj[i].push_back(j);
  std::vector<Matrix> ch(cutoff, Matrix::Zero(n, n));
  std::vector<int> dist(n);
  for (int s = 0; s < n; ++s) {
    if (!mask[s]) continue;
    std::fill(dist.begin(), dist.end(), -1);
    dist[s] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
    }
    for (int j = 0; j < n; ++j) {
      if (j == s || !mask[j]) continue;
      const int d = dist[j] < 0 ? cutoff : std::min(dist[j], cutoff);
      ch[d - 1](s, j) = 1.0;
    }
  }
  return ch;
}

struct FilmCache {
  Matrix gamma, beta;  // 1 x H each
  Matrix u;            // pre-modulation input
};

struct GcnCache {
  Matrix g_in, M, v;
  FilmCache film;
};

struct AttnCache {
  Matrix a_in, Q, K, V, P, O, v;
  FilmCache film;
};

struct Cache {
  int n = 0, n_active = 0;
  Mask mask;
  Matrix F, h0, Atil, temb;
  std::vector<Matrix> E;  // attention bias channels
  std::vector<GcnCache> gcn;
  std::vector<AttnCache> attn;
  Matrix hcat, pooled;
  Matrix hx_pre, hx;
  Matrix Z, hl_pre, hl;
  Matrix SX;
  Vector SL;
};

void zero_masked_rows(Matrix& m, const Mask& mask) {
  for (int i = 0; i < m.rows(); ++i)
    if (!mask[i]) m.row(i).setZero();
}

Matrix masked_adjacency(const Matrix& A, const Mask& mask) {
  Matrix out = A;
  for (int i = 0; i < out.rows(); ++i) {
    if (!mask[i]) {
      out.row(i).setZero();
      out.col(i).setZero();
    }
    out(i, i) = 0.0;
  }
  return out;
}

// gamma/beta generated from the time embedding; modulation is
// (1 + gamma) * u + beta so zeroed generators act as identity.
Matrix film_apply(const Matrix& u, const Matrix& temb, const Matrix& Wg,
                  const Matrix& bg, const Matrix& Wb, const Matrix& bb,
                  FilmCache& cache) {
  cache.gamma = temb * Wg + bg;
  cache.beta = temb * Wb + bb;
  cache.u = u;
  Matrix out = u;
  out.array().rowwise() *= (cache.gamma.row(0).array() + 1.0);
  out.array().rowwise() += cache.beta.row(0).array();
  return out;
}

const char* kHeadFinalNames[] = {"head_x.W2", "head_x.b2", "head_lam.W2",
                                 "head_lam.b2"};

bool is_zero_init(const std::string& name) {
  for (const char* f : kHeadFinalNames)
    if (name == f) return true;
  // Every bias starts at zero; only weight tensors draw random values.
  const auto dot = name.rfind('.');
  const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return !leaf.empty() && leaf[0] == 'b' && leaf != "bias_w";
}

Matrix forward_cached(const ScoreNetParams& p, const ScoreInput& in,
                      const ScoreNetConfig& cfg, Cache& c);

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) throw ParseError("checkpoint truncated while reading an integer");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void validate(const ScoreNetConfig& cfg) {
  if (cfg.hidden_dim < 1) throw ConfigError("hidden_dim must be positive");
  if (cfg.n_gcn_layers < 1) throw ConfigError("n_gcn_layers must be positive");
  if (cfg.n_attn_layers < 1) throw ConfigError("n_attn_layers must be positive");
  if (cfg.time_dim < 2) throw ConfigError("time_dim must be at least 2");
  if (cfg.time_dim % 2 != 0) throw ConfigError("time_dim must be even");
  if (cfg.rw_steps < 1) throw ConfigError("rw_steps must be at least 1");
  if (cfg.sp_cutoff < 1) throw ConfigError("sp_cutoff must be positive");
  if (cfg.feature_dim < 1) throw ConfigError("feature_dim must be positive");
}

Matrix& ScoreNetParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("unknown parameter tensor: " + name);
  return it->second;
}

const Matrix& ScoreNetParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("unknown parameter tensor: " + name);
  return it->second;
}

std::vector<std::pair<std::string, std::pair<int, int>>> param_registry(
    const ScoreNetConfig& cfg) {
  validate(cfg);
  const int H = cfg.hidden_dim;
  const int T = cfg.time_dim;
  const int d = cfg.feature_dim;
  const int C = cfg.sp_cutoff + 1;  // shortest-path channels + endpoint adjacency
  std::vector<std::pair<std::string, std::pair<int, int>>> reg;
  auto add = [&](const std::string& name, int r, int cc) {
    reg.emplace_back(name, std::make_pair(r, cc));
  };
  add("in.W", 2 * d + cfg.rw_steps, H);
  add("in.b", 1, H);
  auto add_film = [&](const std::string& prefix) {
    add(prefix + ".film.Wg", T, H);
    add(prefix + ".film.bg", 1, H);
    add(prefix + ".film.Wb", T, H);
    add(prefix + ".film.bb", 1, H);
  };
  for (int l = 1; l <= cfg.n_gcn_layers; ++l) {
    const std::string p = "gcn" + std::to_string(l);
    add(p + ".W", H, H);
    add(p + ".b", 1, H);
    add_film(p);
  }
  for (int l = 1; l <= cfg.n_attn_layers; ++l) {
    const std::string p = "attn" + std::to_string(l);
    add(p + ".Wq", H, H);
    add(p + ".Wk", H, H);
    add(p + ".Wv", H, H);
    add(p + ".Wo", H, H);
    add(p + ".bo", 1, H);
    add(p + ".bias_w", 1, C);
    add_film(p);
  }
  add("head_x.W1", 2 * H, H);
  add("head_x.b1", 1, H);
  add("head_x.W2", H, d);
  add("head_x.b2", 1, d);
  add("head_lam.W1", 1 + T + 2 * H, H);
  add("head_lam.b1", 1, H);
  add("head_lam.W2", H, 1);
  add("head_lam.b2", 1, 1);
  return reg;
}

ScoreNetParams init_params(const ScoreNetConfig& cfg, Rng& rng) {
  ScoreNetParams p;
  for (const auto& [name, shape] : param_registry(cfg)) {
    const auto [rows, cols] = shape;
    Matrix m = Matrix::Zero(rows, cols);
    if (!is_zero_init(name)) {
      const int fan_in = rows == 1 ? cols : rows;
      const double lim = std::sqrt(1.0 / fan_in);
      for (int r = 0; r < rows; ++r)
        for (int cc = 0; cc < cols; ++cc)
          m(r, cc) = (2.0 * rng.uniform() - 1.0) * lim;
    }
    p.tensors.emplace(name, std::move(m));
  }
  return p;
}

std::int64_t param_count(const ScoreNetConfig& cfg) {
  std::int64_t total = 0;
  for (const auto& [name, shape] : param_registry(cfg))
    total += static_cast<std::int64_t>(shape.first) * shape.second;
  return total;
}

void validate_params(const ScoreNetParams& params, const ScoreNetConfig& cfg) {
  const auto reg = param_registry(cfg);
  if (params.tensors.size() != reg.size()) {
    std::ostringstream msg;
    msg << "parameter container holds " << params.tensors.size()
        << " tensors, registry expects " << reg.size();
    throw ConfigError(msg.str());
  }
  for (const auto& [name, shape] : reg) {
    const Matrix& m = params.at(name);
    if (m.rows() != shape.first || m.cols() != shape.second) {
      std::ostringstream msg;
      msg << "tensor " << name << " has shape " << m.rows() << "x" << m.cols()
          << ", registry expects " << shape.first << "x" << shape.second;
      throw ConfigError(msg.str());
    }
  }
}

Vector time_embed(double t, int dim) {
  if (dim < 2 || dim % 2 != 0)
    throw ConfigError("time embedding dimension must be a positive even number");
  const int half = dim / 2;
  Vector out(dim);
  for (int k = 0; k < half; ++k) {
    const double freq =
        half == 1 ? 1.0 : std::pow(1000.0, static_cast<double>(k) / (half - 1));
    out(2 * k) = std::sin(freq * t);
    out(2 * k + 1) = std::cos(freq * t);
  }
  return out;
}

std::vector<Matrix> walk_matrices(const Matrix& A, const Mask& mask, int steps) {
  if (steps < 1) throw ConfigError("walk_matrices needs at least one step");
  const int n = static_cast<int>(A.rows());
  const Matrix B = binarize(A, mask);
  Matrix P = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double s = B.row(i).sum();
    if (s == 0.0)
      P(i, i) = 1.0;  // isolated active node: stay put
    else
      P.row(i) = B.row(i) / s;
  }
  std::vector<Matrix> powers;
  powers.reserve(steps);
  powers.push_back(P);
  for (int m = 1; m < steps; ++m) powers.push_back(powers.back() * P);
  return powers;
}

EnrichedFeatures enrich_features(const Graph& g, int rw_steps, int sp_cutoff) {
  validate(g);
  if (rw_steps < 1) throw ConfigError("rw_steps must be at least 1");
  if (sp_cutoff < 1) throw ConfigError("sp_cutoff must be positive");
  EnrichedFeatures out;
  const auto powers = walk_matrices(g.A, g.mask, rw_steps);
  out.node = Matrix::Zero(g.n_max, rw_steps);
  for (int m = 0; m < rw_steps; ++m)
    out.node.col(m) = powers[m].diagonal();
  out.edge = sp_channels(g.A, g.mask, sp_cutoff);
  return out;
}

namespace {

Matrix forward_cached(const ScoreNetParams& p, const ScoreInput& in,
                      const ScoreNetConfig& cfg, Cache& c) {
  const int n = static_cast<int>(in.X.rows());
  const int H = cfg.hidden_dim;
  if (in.X.cols() != cfg.feature_dim)
    throw ConfigError("input feature width does not match the configuration");
  if (in.A.rows() != n || in.A.cols() != n ||
      in.endpoint_X.rows() != n || in.endpoint_X.cols() != cfg.feature_dim ||
      in.endpoint_A.rows() != n || in.endpoint_A.cols() != n ||
      in.lam.size() != n || static_cast<int>(in.mask.size()) != n)
    throw ConfigError("score input shapes are inconsistent");
  if (!std::isfinite(in.t)) throw NumericError("score input time is not finite");

  c.n = n;
  c.mask = in.mask;
  c.n_active = 0;
  for (int i = 0; i < n; ++i)
    if (in.mask[i]) ++c.n_active;
  if (c.n_active == 0) throw ConfigError("score input has no active nodes");

  // Defensive masking so masked-node features can never leak into outputs.
  Matrix Xm = in.X;
  zero_masked_rows(Xm, in.mask);
  Matrix EXm = in.endpoint_X;
  zero_masked_rows(EXm, in.mask);
  const Matrix Am = masked_adjacency(in.A, in.mask);
  const Matrix EAm = masked_adjacency(in.endpoint_A, in.mask);

  // Feature enrichment: return probabilities as node channels, truncated
  // shortest paths and the endpoint adjacency as attention-bias channels.
  const auto powers = walk_matrices(Am, in.mask, cfg.rw_steps);
  Matrix rw = Matrix::Zero(n, cfg.rw_steps);
  for (int m = 0; m < cfg.rw_steps; ++m) rw.col(m) = powers[m].diagonal();
  zero_masked_rows(rw, in.mask);
  c.E = sp_channels(Am, in.mask, cfg.sp_cutoff);
  c.E.push_back(EAm);

  c.F = Matrix(n, 2 * cfg.feature_dim + cfg.rw_steps);
  c.F << Xm, EXm, rw;
  c.h0 = (c.F * p.at("in.W")).rowwise() + p.at("in.b").row(0);
  c.temb = time_embed(in.t, cfg.time_dim).transpose();

  // Symmetrically normalized adjacency with self-loops for the GCN branch.
  Matrix Ahat = Am.cwiseAbs();
  Ahat.diagonal().array() += 1.0;
  Vector dinv = Ahat.rowwise().sum();
  for (int i = 0; i < n; ++i) dinv(i) = 1.0 / std::sqrt(dinv(i));
  c.Atil = dinv.asDiagonal() * Ahat * dinv.asDiagonal();

  const Activation a = cfg.activation;

  Matrix g = c.h0;
  c.gcn.resize(cfg.n_gcn_layers);
  for (int l = 1; l <= cfg.n_gcn_layers; ++l) {
    GcnCache& lc = c.gcn[l - 1];
    const std::string pre = "gcn" + std::to_string(l);
    lc.g_in = g;
    lc.M = c.Atil * g;
    Matrix u = (lc.M * p.at(pre + ".W")).rowwise() + p.at(pre + ".b").row(0);
    lc.v = film_apply(u, c.temb, p.at(pre + ".film.Wg"), p.at(pre + ".film.bg"),
                      p.at(pre + ".film.Wb"), p.at(pre + ".film.bb"), lc.film);
    g = act_mat(lc.v, a);
  }

  Matrix at = c.h0;
  c.attn.resize(cfg.n_attn_layers);
  const double scale = 1.0 / std::sqrt(static_cast<double>(H));
  for (int l = 1; l <= cfg.n_attn_layers; ++l) {
    AttnCache& lc = c.attn[l - 1];
    const std::string pre = "attn" + std::to_string(l);
    lc.a_in = at;
    lc.Q = at * p.at(pre + ".Wq");
    lc.K = at * p.at(pre + ".Wk");
    lc.V = at * p.at(pre + ".Wv");
    Matrix S = (lc.Q * lc.K.transpose()) * scale;
    const Matrix& bw = p.at(pre + ".bias_w");
    for (int ch = 0; ch < static_cast<int>(c.E.size()); ++ch)
      S += bw(0, ch) * c.E[ch];
    // Row softmax over active keys only; masked keys get exact zeros.
    lc.P = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j)
        if (in.mask[j]) mx = std::max(mx, S(i, j));
      double sum = 0.0;
      for (int j = 0; j < n; ++j)
        if (in.mask[j]) {
          lc.P(i, j) = std::exp(S(i, j) - mx);
          sum += lc.P(i, j);
        }
      lc.P.row(i) /= sum;
    }
    lc.O = lc.P * lc.V;
    Matrix u = (lc.O * p.at(pre + ".Wo")).rowwise() + p.at(pre + ".bo").row(0);
    lc.v = film_apply(u, c.temb, p.at(pre + ".film.Wg"), p.at(pre + ".film.bg"),
                      p.at(pre + ".film.Wb"), p.at(pre + ".film.bb"), lc.film);
    at = act_mat(lc.v, a);
  }

  c.hcat = Matrix(n, 2 * H);
  c.hcat << g, at;

  // Node head.
  c.hx_pre = (c.hcat * p.at("head_x.W1")).rowwise() + p.at("head_x.b1").row(0);
  c.hx = act_mat(c.hx_pre, a);
  c.SX = (c.hx * p.at("head_x.W2")).rowwise() + p.at("head_x.b2").row(0);
  zero_masked_rows(c.SX, in.mask);

  // Spectrum head: each eigenvalue sees itself, the time embedding, and the
  // masked mean-pooled hidden state, which keeps it node-permutation
  // invariant.
  c.pooled = Matrix::Zero(1, 2 * H);
  for (int i = 0; i < n; ++i)
    if (in.mask[i]) c.pooled += c.hcat.row(i);
  c.pooled /= static_cast<double>(c.n_active);
  c.Z = Matrix(n, 1 + cfg.time_dim + 2 * H);
  for (int i = 0; i < n; ++i) {
    c.Z(i, 0) = in.lam(i);
    c.Z.block(i, 1, 1, cfg.time_dim) = c.temb;
    c.Z.block(i, 1 + cfg.time_dim, 1, 2 * H) = c.pooled;
  }
  c.hl_pre = (c.Z * p.at("head_lam.W1")).rowwise() + p.at("head_lam.b1").row(0);
  c.hl = act_mat(c.hl_pre, a);
  c.SL = ((c.hl * p.at("head_lam.W2")).rowwise() + p.at("head_lam.b2").row(0))
             .col(0);

  if (!c.SX.allFinite() || !c.SL.allFinite())
    throw NumericError("score network produced non-finite values");
  return c.SX;
}

// Accumulates parameter gradients for one sample given the output adjoints.
void backward_one(const ScoreNetParams& p, const ScoreNetConfig& cfg,
                  const Cache& c, const Matrix& dSX_in, const Vector& dSL,
                  ScoreNetParams& grads) {
  const int n = c.n;
  const int H = cfg.hidden_dim;
  const Activation a = cfg.activation;

  Matrix dSX = dSX_in;
  zero_masked_rows(dSX, c.mask);

  // Node head.
  grads.at("head_x.W2") += c.hx.transpose() * dSX;
  grads.at("head_x.b2") += colsum(dSX);
  Matrix dhx = dSX * p.at("head_x.W2").transpose();
  Matrix dhx_pre = dhx.cwiseProduct(act_deriv_mat(c.hx_pre, a));
  grads.at("head_x.W1") += c.hcat.transpose() * dhx_pre;
  grads.at("head_x.b1") += colsum(dhx_pre);
  Matrix dhcat = dhx_pre * p.at("head_x.W1").transpose();

  // Spectrum head.
  Matrix DSL = dSL;
  grads.at("head_lam.W2") += c.hl.transpose() * DSL;
  grads.at("head_lam.b2") += colsum(DSL);
  Matrix dhl = DSL * p.at("head_lam.W2").transpose();
  Matrix dhl_pre = dhl.cwiseProduct(act_deriv_mat(c.hl_pre, a));
  grads.at("head_lam.W1") += c.Z.transpose() * dhl_pre;
  grads.at("head_lam.b1") += colsum(dhl_pre);
  Matrix dZ = dhl_pre * p.at("head_lam.W1").transpose();
  Matrix dpooled = Matrix::Zero(1, 2 * H);
  for (int i = 0; i < n; ++i)
    dpooled += dZ.block(i, 1 + cfg.time_dim, 1, 2 * H);
  dpooled /= static_cast<double>(c.n_active);
  for (int i = 0; i < n; ++i)
    if (c.mask[i]) dhcat.row(i) += dpooled.row(0);

  Matrix dg = dhcat.leftCols(H);
  Matrix dat = dhcat.rightCols(H);

  auto film_backward = [&](const std::string& pre, const FilmCache& fc,
                           Matrix& dv) {
    // dv arrives as the adjoint of the modulated output.
    Matrix du = dv;
    du.array().rowwise() *= (fc.gamma.row(0).array() + 1.0);
    Matrix dgamma = colsum(dv.cwiseProduct(fc.u));
    Matrix dbeta = colsum(dv);
    grads.at(pre + ".film.Wg") += c.temb.transpose() * dgamma;
    grads.at(pre + ".film.bg") += dgamma;
    grads.at(pre + ".film.Wb") += c.temb.transpose() * dbeta;
    grads.at(pre + ".film.bb") += dbeta;
    dv = du;
  };

  for (int l = cfg.n_gcn_layers; l >= 1; --l) {
    const GcnCache& lc = c.gcn[l - 1];
    const std::string pre = "gcn" + std::to_string(l);
    Matrix dv = dg.cwiseProduct(act_deriv_mat(lc.v, a));
    film_backward(pre, lc.film, dv);
    grads.at(pre + ".W") += lc.M.transpose() * dv;
    grads.at(pre + ".b") += colsum(dv);
    Matrix dM = dv * p.at(pre + ".W").transpose();
    dg = c.Atil.transpose() * dM;
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(H));
  for (int l = cfg.n_attn_layers; l >= 1; --l) {
    const AttnCache& lc = c.attn[l - 1];
    const std::string pre = "attn" + std::to_string(l);
    Matrix dv = dat.cwiseProduct(act_deriv_mat(lc.v, a));
    film_backward(pre, lc.film, dv);
    grads.at(pre + ".Wo") += lc.O.transpose() * dv;
    grads.at(pre + ".bo") += colsum(dv);
    Matrix dO = dv * p.at(pre + ".Wo").transpose();
    Matrix dP = dO * lc.V.transpose();
    Matrix dV = lc.P.transpose() * dO;
    Matrix dS(n, n);
    for (int i = 0; i < n; ++i) {
      const double dot = dP.row(i).dot(lc.P.row(i));
      dS.row(i) = lc.P.row(i).array() * (dP.row(i).array() - dot);
    }
    Matrix& dbw = grads.at(pre + ".bias_w");
    for (int ch = 0; ch < static_cast<int>(c.E.size()); ++ch)
      dbw(0, ch) += dS.cwiseProduct(c.E[ch]).sum();
    Matrix dQ = dS * lc.K * scale;
    Matrix dK = dS.transpose() * lc.Q * scale;
    grads.at(pre + ".Wq") += lc.a_in.transpose() * dQ;
    grads.at(pre + ".Wk") += lc.a_in.transpose() * dK;
    grads.at(pre + ".Wv") += lc.a_in.transpose() * dV;
    dat = dQ * p.at(pre + ".Wq").transpose() +
          dK * p.at(pre + ".Wk").transpose() +
          dV * p.at(pre + ".Wv").transpose();
  }

  Matrix dh0 = dg + dat;
  grads.at("in.W") += c.F.transpose() * dh0;
  grads.at("in.b") += colsum(dh0);
}

ScoreNetParams zero_grads(const ScoreNetConfig& cfg) {
  ScoreNetParams g;
  for (const auto& [name, shape] : param_registry(cfg))
    g.tensors.emplace(name, Matrix::Zero(shape.first, shape.second));
  return g;
}

struct SampleTerms {
  Matrix diff_X;
  Vector diff_lam;
  double omega = 0.0;
};

// Shared loss plumbing: evaluates one sample's residuals against the
// conditional Gaussian score target, or reports it as skipped.
bool sample_terms(const ScoreNetParams& params, const TrainSample& s,
                  const ScoreNetConfig& cfg, const LossConfig& lcfg, Cache& c,
                  SampleTerms& out) {
  if (s.moments.var <= 0.0) return false;
  forward_cached(params, s.input, cfg, c);
  sde::State x_t;
  x_t.X = s.input.X;
  x_t.lam = s.input.lam;
  const sde::State target = sde::conditional_score_target(x_t, s.moments);
  out.diff_X = c.SX - target.X;
  zero_masked_rows(out.diff_X, s.input.mask);
  out.diff_lam = c.SL - target.lam;
  out.omega = lcfg.omega_const < 0.0 ? s.moments.var : lcfg.omega_const;
  return true;
}

}  // namespace

ScoreOutput forward(const ScoreNetParams& params, const ScoreInput& input,
                    const ScoreNetConfig& cfg) {
  validate(cfg);
  validate_params(params, cfg);
  Cache c;
  forward_cached(params, input, cfg, c);
  ScoreOutput out;
  out.S_X = std::move(c.SX);
  out.S_lam = std::move(c.SL);
  return out;
}

double loss(const ScoreNetParams& params, const std::vector<TrainSample>& batch,
            const ScoreNetConfig& cfg, const LossConfig& lcfg, int* skipped_out) {
  validate(cfg);
  validate_params(params, cfg);
  if (batch.empty()) throw ConfigError("loss needs a non-empty batch");
  double total = 0.0;
  int used = 0, skipped = 0;
  Cache c;
  SampleTerms terms;
  for (const TrainSample& s : batch) {
    if (!sample_terms(params, s, cfg, lcfg, c, terms)) {
      ++skipped;
      continue;
    }
    total += terms.omega * (lcfg.c1 * terms.diff_X.squaredNorm() +
                            lcfg.c2 * terms.diff_lam.squaredNorm());
    ++used;
  }
  if (skipped_out) *skipped_out = skipped;
  if (used == 0)
    throw NumericError("every sample in the batch had zero conditional variance");
  return total / used;
}

std::pair<double, ScoreNetParams> loss_grad(const ScoreNetParams& params,
                                            const std::vector<TrainSample>& batch,
                                            const ScoreNetConfig& cfg,
                                            const LossConfig& lcfg,
                                            int* skipped_out) {
  validate(cfg);
  validate_params(params, cfg);
  if (batch.empty()) throw ConfigError("loss_grad needs a non-empty batch");
  int used = 0;
  for (const TrainSample& s : batch)
    if (s.moments.var > 0.0) ++used;
  if (skipped_out) *skipped_out = static_cast<int>(batch.size()) - used;
  if (used == 0)
    throw NumericError("every sample in the batch had zero conditional variance");

  ScoreNetParams grads = zero_grads(cfg);
  double total = 0.0;
  Cache c;
  SampleTerms terms;
  for (const TrainSample& s : batch) {
    if (!sample_terms(params, s, cfg, lcfg, c, terms)) continue;
    total += terms.omega * (lcfg.c1 * terms.diff_X.squaredNorm() +
                            lcfg.c2 * terms.diff_lam.squaredNorm());
    const double wx = 2.0 * terms.omega * lcfg.c1 / used;
    const double wl = 2.0 * terms.omega * lcfg.c2 / used;
    const Matrix dSX = wx * terms.diff_X;
    const Vector dSL = wl * terms.diff_lam;
    backward_one(params, cfg, c, dSX, dSL, grads);
  }
  return {total / used, std::move(grads)};
}

void adam_step(ScoreNetParams& params, const ScoreNetParams& grads,
               AdamState& state, const AdamConfig& acfg) {
  if (state.m.empty()) {
    for (const auto& [name, tensor] : params.tensors) {
      state.m.emplace(name, Matrix::Zero(tensor.rows(), tensor.cols()));
      state.v.emplace(name, Matrix::Zero(tensor.rows(), tensor.cols()));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(acfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(acfg.beta2, static_cast<double>(state.step));
  for (auto& [name, tensor] : params.tensors) {
    const Matrix& g = grads.at(name);
    Matrix& m = state.m.at(name);
    Matrix& v = state.v.at(name);
    m = acfg.beta1 * m + (1.0 - acfg.beta1) * g;
    v = acfg.beta2 * v + (1.0 - acfg.beta2) * g.cwiseProduct(g);
    const Matrix mhat = m / bc1;
    const Matrix vhat = v / bc2;
    tensor.array() -= acfg.lr * mhat.array() / (vhat.array().sqrt() + acfg.eps);
  }
}

std::string activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "silu";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "silu") return Activation::silu;
  throw ConfigError("unknown activation: " + name);
}

namespace {

constexpr char kMagic[8] = {'H', 'O', 'G', 'C', 'K', 'P', 'T', '1'};

nlohmann::json config_to_json(const ScoreNetConfig& cfg) {
  return nlohmann::json{{"hidden_dim", cfg.hidden_dim},
                        {"n_gcn_layers", cfg.n_gcn_layers},
                        {"n_attn_layers", cfg.n_attn_layers},
                        {"time_dim", cfg.time_dim},
                        {"rw_steps", cfg.rw_steps},
                        {"sp_cutoff", cfg.sp_cutoff},
                        {"feature_dim", cfg.feature_dim},
                        {"activation", activation_name(cfg.activation)}};
}

ScoreNetConfig config_from_json(const nlohmann::json& j) {
  ScoreNetConfig cfg;
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.n_gcn_layers = j.at("n_gcn_layers").get<int>();
  cfg.n_attn_layers = j.at("n_attn_layers").get<int>();
  cfg.time_dim = j.at("time_dim").get<int>();
  cfg.rw_steps = j.at("rw_steps").get<int>();
  cfg.sp_cutoff = j.at("sp_cutoff").get<int>();
  cfg.feature_dim = j.at("feature_dim").get<int>();
  cfg.activation = activation_from_name(j.at("activation").get<std::string>());
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const ScoreNetConfig& cfg,
                     const ScoreNetParams& params) {
  validate(cfg);
  validate_params(params, cfg);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint file for writing: " + path);
  out.write(kMagic, 8);
  const std::string js = config_to_json(cfg).dump();
  write_u64(out, js.size());
  out.write(js.data(), static_cast<std::streamsize>(js.size()));
  const auto reg = param_registry(cfg);
  write_u64(out, reg.size());
  std::vector<double> buf;
  for (const auto& [name, shape] : reg) {
    const Matrix& m = params.at(name);
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    buf.clear();
    buf.reserve(static_cast<std::size_t>(m.size()));
    for (int r = 0; r < m.rows(); ++r)
      for (int cc = 0; cc < m.cols(); ++cc) buf.push_back(m(r, cc));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
  }
  if (!out) throw Error("failed while writing checkpoint: " + path);
}

std::pair<ScoreNetConfig, ScoreNetParams> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw ParseError("not a checkpoint file (bad magic): " + path);
  const std::uint64_t js_len = read_u64(in);
  if (js_len > (1u << 20))
    throw ParseError("checkpoint config record is implausibly large");
  std::string js(js_len, '\0');
  in.read(js.data(), static_cast<std::streamsize>(js_len));
  if (!in) throw ParseError("checkpoint truncated inside the config record");
  ScoreNetConfig cfg;
  try {
    cfg = config_from_json(nlohmann::json::parse(js));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint config record: ") +
                     e.what());
  }
  validate(cfg);
  const auto reg = param_registry(cfg);
  const std::uint64_t count = read_u64(in);
  if (count != reg.size())
    throw ParseError("checkpoint tensor count does not match the config");
  ScoreNetParams params;
  for (const auto& [want_name, shape] : reg) {
    const std::uint64_t name_len = read_u64(in);
    if (name_len > (1u << 12))
      throw ParseError("checkpoint tensor name is implausibly large");
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!in) throw ParseError("checkpoint truncated inside a tensor name");
    if (name != want_name)
      throw ParseError("checkpoint tensor order mismatch: expected " +
                       want_name + ", found " + name);
    const auto rows = static_cast<int>(read_u64(in));
    const auto cols = static_cast<int>(read_u64(in));
    if (rows != shape.first || cols != shape.second)
      throw ParseError("checkpoint tensor " + name + " has the wrong shape");
    std::vector<double> buf(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in) throw ParseError("checkpoint truncated inside tensor " + name);
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (int r = 0; r < rows; ++r)
      for (int cc = 0; cc < cols; ++cc) m(r, cc) = buf[k++];
    params.tensors.emplace(name, std::move(m));
  }
  return {cfg, std::move(params)};
}

}  // namespace hogdiff::score
