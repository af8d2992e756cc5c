#include "hogdiff/sde.hpp"

#include <cmath>
#include <sstream>

#include "hogdiff/errors.hpp"

namespace hogdiff::sde {

namespace {

void draw_gauss_like(const State& shape, Rng& rng, State& out) {
  out.X = Matrix(shape.X.rows(), shape.X.cols());
  for (Eigen::Index i = 0; i < out.X.rows(); ++i)
    for (Eigen::Index j = 0; j < out.X.cols(); ++j) out.X(i, j) = rng.gauss();
  out.lam = Vector(shape.lam.size());
  for (Eigen::Index k = 0; k < out.lam.size(); ++k) out.lam(k) = rng.gauss();
}

}  // namespace

void validate(const NoiseSchedule& sched) {
  if (sched.T <= 0.0) throw ConfigError("schedule horizon T must be positive");
  if (sched.kind == NoiseSchedule::Kind::gou) {
    if (sched.theta_min <= 0.0 || sched.theta_max <= 0.0)
      throw ConfigError("theta range must be positive");
    if (sched.sigma2 <= 0.0) throw ConfigError("sigma2 must be positive");
  } else {
    if (sched.beta_min <= 0.0 || sched.beta_max <= 0.0)
      throw ConfigError("beta range must be positive");
  }
}

void validate(const BridgeSegment& seg) {
  validate(seg.sched);
  if (!(seg.t_start < seg.t_end))
    throw ConfigError("bridge segment needs t_start < t_end");
  if (!seg.a.same_shape(seg.b))
    throw ConfigError("bridge endpoints must share one shape");
}

State state_zeros_like(const State& s) {
  State z;
  z.X = Matrix::Zero(s.X.rows(), s.X.cols());
  z.lam = Vector::Zero(s.lam.size());
  return z;
}

void mask_state(State& s, const Mask* mask) {
  if (!mask) return;
  for (Eigen::Index i = 0; i < s.X.rows(); ++i)
    if (i < static_cast<Eigen::Index>(mask->size()) && !(*mask)[static_cast<size_t>(i)])
      s.X.row(i).setZero();
}

GaussianMoments gou_transition(const State& x_s, double s, double t, const State& mu,
                               const NoiseSchedule& sched) {
  validate(sched);
  if (sched.kind != NoiseSchedule::Kind::gou)
    throw ConfigError("gou_transition needs a gou schedule");
  if (s > t) throw NumericError("gou_transition needs s <= t");
  if (!x_s.same_shape(mu)) throw ConfigError("state and mu shapes differ");
  const double decay = std::exp(-sched.theta_bar(s, t));
  GaussianMoments out;
  out.mean.X = mu.X + (x_s.X - mu.X) * decay;
  out.mean.lam = mu.lam + (x_s.lam - mu.lam) * decay;
  out.var = sched.v2(s, t);
  return out;
}

State h_function(const State& x_t, double t, const State& x_T, double T_end,
                 const NoiseSchedule& sched) {
  validate(sched);
  if (!(t < T_end)) throw NumericError("h_function is singular at t >= T");
  const double denom = sched.sigma2 * std::expm1(2.0 * sched.theta_bar(t, T_end));
  State out;
  out.X = (x_T.X - x_t.X) / denom;
  out.lam = (x_T.lam - x_t.lam) / denom;
  return out;
}

State bridge_drift(const State& x_t, double t, const BridgeSegment& seg) {
  validate(seg);
  if (seg.sched.kind != NoiseSchedule::Kind::gou)
    throw ConfigError("bridge_drift needs a gou schedule");
  if (!(seg.t_start <= t && t < seg.t_end))
    throw NumericError("bridge_drift is singular at t >= t_end");
  const double coeff =
      seg.sched.theta(t) *
      (1.0 + 2.0 / std::expm1(2.0 * seg.sched.theta_bar(t, seg.t_end)));
  State out;
  out.X = coeff * (seg.b.X - x_t.X);
  out.lam = coeff * (seg.b.lam - x_t.lam);
  return out;
}

GaussianMoments bridge_conditional(const BridgeSegment& seg, double t) {
  validate(seg);
  if (seg.sched.kind != NoiseSchedule::Kind::gou)
    throw ConfigError("bridge_conditional needs a gou schedule");
  if (!(seg.t_start <= t && t <= seg.t_end))
    throw NumericError("time outside the bridge window");
  const double v_at = seg.sched.v2(seg.t_start, t);
  const double v_tb = seg.sched.v2(t, seg.t_end);
  const double v_ab = seg.sched.v2(seg.t_start, seg.t_end);
  const double decay = std::exp(-seg.sched.theta_bar(seg.t_start, t));
  const double pull = decay * v_tb / v_ab;
  GaussianMoments out;
  out.mean.X = seg.b.X + (seg.a.X - seg.b.X) * pull;
  out.mean.lam = seg.b.lam + (seg.a.lam - seg.b.lam) * pull;
  out.var = v_at * v_tb / v_ab;
  return out;
}

State sample_bridge_state(const BridgeSegment& seg, double t, Rng& rng,
                          const Mask* mask) {
  const GaussianMoments m = bridge_conditional(seg, t);
  const double sd = std::sqrt(m.var);
  State noise;
  draw_gauss_like(m.mean, rng, noise);
  State out;
  out.X = m.mean.X + sd * noise.X;
  out.lam = m.mean.lam + sd * noise.lam;
  mask_state(out, mask);
  return out;
}

State conditional_score_target(const State& x_t, const GaussianMoments& moments) {
  if (!(moments.var > 0.0))
    throw NumericError("score target undefined at zero variance");
  State out;
  out.X = -(x_t.X - moments.mean.X) / moments.var;
  out.lam = -(x_t.lam - moments.mean.lam) / moments.var;
  return out;
}

State euler_reverse(const BridgeSegment& seg, const ScoreFn& score, int steps,
                    Rng& rng, const Mask* mask, const StepObserver& observer) {
  validate(seg);
  if (steps < 1) throw ConfigError("euler_reverse needs steps >= 1");
  const double dt = (seg.t_end - seg.t_start) / steps;
  State x = seg.b;
  mask_state(x, mask);
  for (int m = steps - 1; m >= 0; --m) {
    const double t = seg.t_start + m * dt;
    const State drift = bridge_drift(x, t, seg);
    const State s = score(x, t);
    const double g2t = seg.sched.g2(t);
    const double noise_scale = std::sqrt(g2t * dt);
    State noise;
    draw_gauss_like(x, rng, noise);
    x.X = x.X - (drift.X - g2t * s.X) * dt + noise_scale * noise.X;
    x.lam = x.lam - (drift.lam - g2t * s.lam) * dt + noise_scale * noise.lam;
    mask_state(x, mask);
    if (!x.all_finite()) {
      std::ostringstream msg;
      msg << "reverse integration diverged at step " << (steps - m) << " of "
          << steps << " (t = " << t << ")";
      throw DivergenceError(msg.str());
    }
    if (observer) observer(m, t, x);
  }
  return x;
}

GaussianMoments vp_transition(const State& x_0, double t, const NoiseSchedule& sched) {
  validate(sched);
  if (sched.kind != NoiseSchedule::Kind::vp)
    throw ConfigError("vp_transition needs a vp schedule");
  if (t < 0.0) throw NumericError("vp_transition needs t >= 0");
  const double bint = sched.beta_int(t);
  GaussianMoments out;
  const double decay = std::exp(-0.5 * bint);
  out.mean.X = x_0.X * decay;
  out.mean.lam = x_0.lam * decay;
  out.var = -std::expm1(-bint);
  return out;
}

State vp_reverse_step(const State& x, double t, const State& score, double dt,
                      Rng& rng, const NoiseSchedule& sched, const Mask* mask) {
  validate(sched);
  if (sched.kind != NoiseSchedule::Kind::vp)
    throw ConfigError("vp_reverse_step needs a vp schedule");
  const double b = sched.beta(t);
  const double noise_scale = std::sqrt(b * dt);
  State noise;
  draw_gauss_like(x, rng, noise);
  State out;
  out.X = x.X - (-0.5 * b * x.X - b * score.X) * dt + noise_scale * noise.X;
  out.lam = x.lam - (-0.5 * b * x.lam - b * score.lam) * dt + noise_scale * noise.lam;
  mask_state(out, mask);
  if (!out.all_finite()) throw DivergenceError("vp reverse step diverged");
  return out;
}

}  // namespace hogdiff::sde
