#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hogdiff/errors.hpp"
#include "hogdiff/graph.hpp"
#include "hogdiff/linalg.hpp"
#include "hogdiff/rng.hpp"
#include "hogdiff/sde.hpp"

// A small permutation-equivariant score network over (node features,
// eigenvalues): feature enrichment from random walks and shortest paths, a
// graph-convolution branch and a single-head attention branch fused by
// feature-wise time modulation, and two output heads. Gradients are
// hand-written reverse-mode for this fixed architecture; there is no general
// autodiff here.
namespace hogdiff::score {

enum class Activation { relu, silu };

struct ScoreNetConfig {
  int hidden_dim = 32;
  int n_gcn_layers = 2;
  int n_attn_layers = 1;
  int time_dim = 16;
  int rw_steps = 4;    // random-walk feature depth
  int sp_cutoff = 5;   // shortest-path one-hot truncation
  int feature_dim = 1; // node feature width the network expects
  Activation activation = Activation::silu;
};

// Throws ConfigError on nonpositive dims, odd time_dim, rw_steps < 1.
void validate(const ScoreNetConfig& cfg);

// Named parameter tensors. Biases are 1-row matrices. The map is ordered, so
// iteration follows the registry order and is deterministic.
struct ScoreNetParams {
  std::map<std::string, Matrix> tensors;

  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
};

// Canonical (name, {rows, cols}) list for a config. Parameter containers must
// match it exactly; init, gradients, optimizer state, and checkpoints all
// iterate in this order.
std::vector<std::pair<std::string, std::pair<int, int>>> param_registry(
    const ScoreNetConfig& cfg);

// Fan-in-scaled uniform init; the final layers of both heads are zeroed so an
// untrained network outputs an identically zero score.
ScoreNetParams init_params(const ScoreNetConfig& cfg, Rng& rng);

std::int64_t param_count(const ScoreNetConfig& cfg);

// Throws ConfigError if the container does not match the registry.
void validate_params(const ScoreNetParams& params, const ScoreNetConfig& cfg);

// Interleaved sin/cos of t under geometrically spaced frequencies.
Vector time_embed(double t, int dim);

// Row-normalized walk matrices P^1..P^m of the binarized graph (|a| > 0.5).
// Active isolated nodes keep self-probability 1; masked rows are zero.
std::vector<Matrix> walk_matrices(const Matrix& A, const Mask& mask, int steps);

// Node block: per-node return probabilities diag(P^m), m = 1..rw_steps.
// Edge block: one-hot truncated shortest-path distance channels, channel k
// holding pairs at distance k+1 with everything at or beyond sp_cutoff (and
// unreachable pairs) clipped into the last channel.
struct EnrichedFeatures {
  Matrix node;                 // n x rw_steps
  std::vector<Matrix> edge;    // sp_cutoff matrices, each n x n
};
EnrichedFeatures enrich_features(const Graph& g, int rw_steps, int sp_cutoff);

// Everything the network sees for one sample. All node-indexed inputs share
// the same leading size; masked rows are zeroed defensively on entry.
struct ScoreInput {
  Matrix X;           // n x feature_dim, node features at time t
  Matrix A;           // n x n, reconstructed adjacency at time t
  Vector lam;         // n eigenvalues at time t
  Matrix endpoint_X;  // conditioning endpoint node features
  Matrix endpoint_A;  // conditioning endpoint adjacency
  double t = 0.0;
  Mask mask;
};

struct ScoreOutput {
  Matrix S_X;   // n x feature_dim, masked rows zero
  Vector S_lam; // n
};

ScoreOutput forward(const ScoreNetParams& params, const ScoreInput& input,
                    const ScoreNetConfig& cfg);

// One training sample: the network input holds the sampled bridge state
// (X, lam) at input.t, and moments holds the conditional law it was drawn
// from. The squared-error target is the conditional Gaussian score.
struct TrainSample {
  ScoreInput input;
  sde::GaussianMoments moments;
};

struct LossConfig {
  double c1 = 1.0;           // node-score term weight
  double c2 = 1.0;           // spectrum-score term weight
  double omega_const = -1.0; // < 0: weight each sample by moments.var
};

// Mean over the batch of omega * (c1 ||S_X - target_X||^2 +
// c2 ||S_lam - target_lam||^2), masked rows excluded. Zero-variance samples
// are skipped and counted through skipped_out; an all-skipped batch throws
// NumericError.
double loss(const ScoreNetParams& params, const std::vector<TrainSample>& batch,
            const ScoreNetConfig& cfg, const LossConfig& lcfg,
            int* skipped_out = nullptr);

// Same reduction, plus exact gradients for every registry tensor.
std::pair<double, ScoreNetParams> loss_grad(const ScoreNetParams& params,
                                            const std::vector<TrainSample>& batch,
                                            const ScoreNetConfig& cfg,
                                            const LossConfig& lcfg,
                                            int* skipped_out = nullptr);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
  long long step = 0;
};

void adam_step(ScoreNetParams& params, const ScoreNetParams& grads,
               AdamState& state, const AdamConfig& acfg = {});

// Single-file checkpoint holding the config record and every tensor,
// shape-tagged, as little-endian float64; byte layout in docs/FORMATS.md.
// load(save(p)) is bitwise identity. Throws ParseError on malformed input.
void save_checkpoint(const std::string& path, const ScoreNetConfig& cfg,
                     const ScoreNetParams& params);
std::pair<ScoreNetConfig, ScoreNetParams> load_checkpoint(const std::string& path);

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

}  // namespace hogdiff::score
