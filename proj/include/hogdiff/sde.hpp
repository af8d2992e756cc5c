#pragma once

#include <functional>

#include "hogdiff/graph.hpp"
#include "hogdiff/linalg.hpp"
#include "hogdiff/rng.hpp"

namespace hogdiff::sde {

// Time-dependent coefficients. The mean-reverting kind uses a linear rate
// theta(t) with diffusion tied by g(t)^2 = 2 sigma2 theta(t); the variance
// preserving kind uses a linear beta(t). Integrated rates are exact
// (trapezoid of a linear function).
struct NoiseSchedule {
  enum class Kind { gou, vp };
  Kind kind = Kind::gou;
  double theta_min = 0.1;
  double theta_max = 4.0;
  double sigma2 = 1.0;
  double beta_min = 0.1;
  double beta_max = 20.0;
  double T = 1.0;

  double theta(double t) const { return theta_min + (theta_max - theta_min) * t / T; }
  double theta_bar(double s, double t) const {
    return 0.5 * (t - s) * (theta(s) + theta(t));
  }
  double g2(double t) const { return 2.0 * sigma2 * theta(t); }
  // sigma2 (1 - e^{-2 theta_bar(s,t)}), exactly zero when s == t.
  double v2(double s, double t) const { return -sigma2 * std::expm1(-2.0 * theta_bar(s, t)); }

  double beta(double t) const { return beta_min + (beta_max - beta_min) * t / T; }
  double beta_int(double t) const {
    return beta_min * t + 0.5 * (beta_max - beta_min) * t * t / T;
  }
};

void validate(const NoiseSchedule& sched);

// Joint diffusion state: a node-feature block and an eigenvalue block. Both
// blocks share drift and diffusion coefficients but consume independent noise.
// Either block may be empty (scalar toys use a 1x1 X block and no lam).
struct State {
  Matrix X;
  Vector lam;

  static State scalar(double v) {
    State s;
    s.X = Matrix::Constant(1, 1, v);
    s.lam = Vector(0);
    return s;
  }
  double as_scalar() const { return X(0, 0); }
  bool same_shape(const State& o) const {
    return X.rows() == o.X.rows() && X.cols() == o.X.cols() && lam.size() == o.lam.size();
  }
  bool all_finite() const { return X.allFinite() && lam.allFinite(); }
};

struct GaussianMoments {
  State mean;
  double var = 0.0;
};

// One time window with pinned endpoints: `a` at t_start, `b` at t_end.
struct BridgeSegment {
  double t_start = 0.0;
  double t_end = 1.0;
  State a;
  State b;
  NoiseSchedule sched;
};

void validate(const BridgeSegment& seg);

// Transition of the mean-reverting process from x_s at time s to time t:
// mean = mu + (x_s - mu) e^{-theta_bar(s,t)}, var = sigma2 (1 - e^{-2 theta_bar}).
GaussianMoments gou_transition(const State& x_s, double s, double t, const State& mu,
                               const NoiseSchedule& sched);

// Endpoint steering term (x_T - x_t) / (sigma2 (e^{2 theta_bar(t,T)} - 1)).
// Singular at t = T.
State h_function(const State& x_t, double t, const State& x_T, double T_end,
                 const NoiseSchedule& sched);

// Pinned-bridge drift theta(t) (1 + 2/(e^{2 theta_bar(t, t_end)} - 1)) (b - x_t).
State bridge_drift(const State& x_t, double t, const BridgeSegment& seg);

// Law of the bridge state at time t given both endpoints. Variance is exactly
// zero at the endpoints.
GaussianMoments bridge_conditional(const BridgeSegment& seg, double t);

// mean + sqrt(var) xi, entry-wise independent standard normals; masked X rows
// forced to zero when a mask is supplied.
State sample_bridge_state(const BridgeSegment& seg, double t, Rng& rng,
                          const Mask* mask = nullptr);

// Score of N(mean, var I) at x_t: -(x_t - mean)/var. Errors on var = 0.
State conditional_score_target(const State& x_t, const GaussianMoments& moments);

using ScoreFn = std::function<State(const State&, double)>;
using StepObserver = std::function<void(int step, double t, const State& x)>;

// Reverse Euler-Maruyama over the segment: starting from the t_end endpoint,
// update x <- x - [drift(x,t) - g(t)^2 score(x,t)] dt + g(t) sqrt(dt) xi on a
// uniform grid whose first evaluation sits at t_end - dt (the drift is
// singular at t_end itself). Returns the state at t_start. Throws
// DivergenceError naming the step on NaN/Inf.
State euler_reverse(const BridgeSegment& seg, const ScoreFn& score, int steps,
                    Rng& rng, const Mask* mask = nullptr,
                    const StepObserver& observer = {});

// Variance-preserving transition from x_0: mean = x_0 e^{-1/2 int beta},
// var = 1 - e^{-int beta}.
GaussianMoments vp_transition(const State& x_0, double t, const NoiseSchedule& sched);

// One reverse step of the VP SDE with drift -1/2 beta x - beta score.
State vp_reverse_step(const State& x, double t, const State& score, double dt,
                      Rng& rng, const NoiseSchedule& sched,
                      const Mask* mask = nullptr);

// Element-wise helpers shared by integrators and the training loop.
State state_zeros_like(const State& s);
void mask_state(State& s, const Mask* mask);

}  // namespace hogdiff::sde
