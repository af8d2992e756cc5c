#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hogdiff/graph.hpp"
#include "hogdiff/metrics.hpp"
#include "hogdiff/rng.hpp"
#include "hogdiff/score_model.hpp"
#include "hogdiff/sde.hpp"
#include "hogdiff/spectral.hpp"
#include "hogdiff/topology.hpp"

namespace hogdiff::pipeline {

// Segment boundaries 0 = tau_0 < ... < tau_K = T. Segment k (1-based) spans
// [tau_{k-1}, tau_k].
struct TimeWindows {
  std::vector<double> boundaries;

  int K() const { return static_cast<int>(boundaries.size()) - 1; }
  double T() const { return boundaries.back(); }
};

void validate(const TimeWindows& w);

// boundaries = {0} + {T * split for each split} + {T}; splits must be
// strictly ascending inside (0, 1) and there must be K-1 of them.
TimeWindows build_windows(int K, double T, const std::vector<double>& splits);

struct RunConfig {
  TimeWindows windows;                   // default: two segments split at T/2
  std::vector<topo::FilterSpec> filters; // one per interior boundary (K-1)
  sde::NoiseSchedule gou;                // bridge segments, global clock
  sde::NoiseSchedule vp;                 // final segment, its own clock [0, vp.T]
  score::ScoreNetConfig net;             // one architecture shared by all segments
  score::LossConfig loss;
  score::AdamConfig adam;
  int train_steps = 500;
  int batch_size = 8;
  std::vector<int> sample_steps;         // integration steps per segment, size K
  QuantizationRule rule;                 // applied to generated adjacencies
  bool quantize_intermediate = true;     // quantize stage-boundary adjacencies
  // When set, the final (prior-facing) segment diffuses the original graph
  // instead of the tau_{K-1} skeleton, making that segment independent of
  // the chosen guide. Default follows the coarse-to-fine construction.
  bool final_from_original = false;
  std::uint64_t seed = 0;

  RunConfig();
};

void validate(const RunConfig& cfg);

// Everything derived from one training graph that the stages reuse: the
// spectral basis of its Laplacian and the endpoint states and skeleton
// graphs at boundaries tau_0 .. tau_{K-1}. The terminal boundary tau_K is a
// standard-normal draw made at use time and is not stored. A boundary whose
// filter kind is `noise` is likewise drawn at use time (noise_at[k] = 1 and
// the stored state/view are zero placeholders).
struct PreparedGraph {
  Graph original;
  SpectralState basis;             // eigenvectors/values of the original Laplacian
  std::vector<sde::State> states;  // index k in [0, K-1]: state at tau_k
  std::vector<Graph> views;        // skeleton graph at the same boundaries
  std::vector<std::uint8_t> noise_at;  // size K, index 0 always 0
};

// Pads a graph to a larger slate by appending masked zero slots.
Graph pad_to(const Graph& g, int n_max);

// All graphs must already share one (n_max, feature) shape; boundary 0 keeps
// the original graph, interior boundaries hold filtered views with the
// eigenvalues of their own Laplacians, while eigenvectors for
// reconstruction always come from the original basis.
std::vector<PreparedGraph> prepare_intermediates(
    const std::vector<Graph>& dataset, const TimeWindows& windows,
    const std::vector<topo::FilterSpec>& specs);

struct TrainResult {
  score::ScoreNetParams params;
  std::vector<double> losses;  // one entry per optimizer step
};

// Trains the score network for segment k (1-based). Bridge segments (k < K)
// sample t uniformly in [tau_{k-1}, tau_k] on the mean-reverting schedule's
// global clock and draw the two-endpoint bridge state; the final segment
// k == K samples t uniformly on the variance-preserving schedule's own
// clock [0, vp.T) and draws the forward transition from the tau_{K-1} state
// (or the original graph under final_from_original). Per drawn sample the
// generator consumes, in order: one integer for the graph index, one
// uniform for the time, one normal per feature entry (row-major), then one
// normal per eigenvalue. A non-finite loss raises an error naming the step.
TrainResult train_segment(int k, const std::vector<PreparedGraph>& prepared,
                          const RunConfig& cfg, Rng& rng);

struct SampleResult {
  std::vector<Graph> graphs;
  int requested = 0;
  int failed = 0;  // trajectories dropped after non-finite states
};

// Score oracle used by sample_with_score: maps (state, time, segment,
// terminal endpoint of that segment) to a score state. Time is absolute for
// bridge segments and the VP clock for the final one, matching training.
using SegmentScore = std::function<sde::State(
    const sde::State& x, double t, int segment, const sde::State& endpoint)>;

// Generation with an arbitrary score callback: per trajectory, draw
// (X, Lambda) from a standard normal, pick a training basis uniformly, run
// the reverse variance-preserving segment, then the reverse bridge segments
// K-1 .. 1, each pinned on the previous segment's output. Stage-boundary
// adjacencies are reconstructed as U0 Lambda U0^T re-centered to zero
// diagonal and optionally quantized; final outputs are always quantized.
// Trajectory j draws from Rng::stream(root_seed, j), so results are
// identical for any thread count.
SampleResult sample_with_score(const std::vector<PreparedGraph>& prepared,
                               const SegmentScore& score,
                               const RunConfig& cfg, int n_samples,
                               std::uint64_t root_seed, int threads = 1);

// Same, scoring with trained per-segment networks (params[k-1] for segment k).
SampleResult sample(const std::vector<PreparedGraph>& prepared,
                    const std::vector<score::ScoreNetParams>& params,
                    const RunConfig& cfg, int n_samples,
                    std::uint64_t root_seed, int threads = 1);

struct AblationEntry {
  std::string guide;
  std::vector<std::vector<double>> seg_losses;  // index k-1: segment k curve
  metrics::MMDReport report;
  int failed = 0;
};

// Trains and samples once per guide name ("cell", "periphery", "noise"),
// evaluating each sample set against `reference`. Every guide run derives
// its generators the same way from cfg.seed, so runs are comparable and any
// stage that does not depend on the guide behaves identically across them.
std::vector<AblationEntry> run_ablation(const std::vector<std::string>& guides,
                                        const std::vector<Graph>& train_set,
                                        const std::vector<Graph>& reference,
                                        const RunConfig& cfg, int n_samples,
                                        int threads = 1);

}  // namespace hogdiff::pipeline
