#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "iaknn/data/track.hpp"
#include "iaknn/errors.hpp"
#include "iaknn/model/kalman.hpp"
#include "iaknn/model/motion.hpp"
#include "iaknn/nn/layers.hpp"
#include "iaknn/nn/ops.hpp"

namespace iaknn {

inline constexpr double kSigmaMin2 = 1e-6;

// ---------------------------------------------------------------------------
// Noise models: fc reduction -> LSTM -> head -> softplus + floor.

struct NoiseModelConfig {
  std::size_t reduce_width = 32;
  std::size_t hidden = 32;
  double input_scale = 0.1;
  double sigma_min2 = kSigmaMin2;
};

inline std::vector<nn::ParamSpec> noise_param_specs(const std::string& prefix, std::size_t state_dim,
                                                    const NoiseModelConfig& cfg) {
  std::vector<nn::ParamSpec> specs = nn::fc_param_specs(prefix + ".in", state_dim, cfg.reduce_width);
  for (auto& s : nn::lstm_param_specs(prefix + ".lstm", cfg.reduce_width, cfg.hidden)) specs.push_back(s);
  for (auto& s : nn::fc_param_specs(prefix + ".out", cfg.hidden, state_dim)) specs.push_back(s);
  return specs;
}

/// Recurrent covariance model. Each call to step() feeds one more history
/// element and returns the covariance diagonal read from the current state.
class NoiseModel {
 public:
  NoiseModel(std::string prefix, NoiseModelConfig cfg) : prefix_(std::move(prefix)), cfg_(cfg) {}

  Var step(nn::Tape& tape, nn::ParamStore& params, const Var& input) {
    if (state_ && &state_->hidden.tape() != &tape) throw StateError(prefix_ + ": state belongs to another tape");
    if (!state_) state_ = nn::lstm_zero_state(tape, cfg_.hidden);
    Var reduced = nn::fc_forward(tape, nn::scale(input, cfg_.input_scale), params, prefix_ + ".in",
                                 nn::Activation::relu);
    state_ = nn::lstm_step(tape, reduced, *state_, params, prefix_ + ".lstm");
    Var raw = nn::fc_forward(tape, state_->hidden, params, prefix_ + ".out", nn::Activation::identity);
    return nn::add_scalar(nn::softplus(raw), cfg_.sigma_min2);
  }

  void reset() { state_.reset(); }

 private:
  std::string prefix_;
  NoiseModelConfig cfg_;
  std::optional<nn::LstmState> state_;
};

/// Covariance diagonal after consuming a whole history from a fresh state.
inline Var noise_covariances(nn::Tape& tape, nn::ParamStore& params, const std::string& prefix,
                             const NoiseModelConfig& cfg, const std::vector<Var>& history) {
  if (history.empty()) throw StateError(prefix + ": empty history");
  NoiseModel model(prefix, cfg);
  Var out;
  for (const auto& x : history) out = model.step(tape, params, x);
  return out;
}

// ---------------------------------------------------------------------------
// Per-axis block filter. With F, Q, R block structured as built here, the
// covariance stays block diagonal in 2x2 (p, v) blocks, one per agent and
// forecast step. Each block j = n * L + l is stored as [[a, b], [b, c]].

struct AxisBlocks {
  Var p, v;     // means, NL each
  Var a, b, c;  // covariance blocks, NL each
};

struct BlockEstimate {
  std::array<AxisBlocks, 2> axis;
};

struct FilterStepInput {
  Var control;         // U_{t-1}, [L, N, 2]
  Var obs_positions;   // T_t, [L, N, 2]
  Var obs_velocities;  // [L, N, 2]
  std::vector<Vec2> anchor_positions;   // observed p_t per agent
  std::vector<Vec2> anchor_velocities;  // observed v_t per agent
};

struct FilterSequenceInput {
  std::size_t n_agents = 0;
  std::size_t horizon = 0;
  double dt = kFrameDt;
  Tensor init_positions;   // [L, N, 2]
  Tensor init_velocities;  // [L, N, 2]
  double p0 = 1.0;
  std::vector<FilterStepInput> steps;
};

enum class NoiseMode { learned, fixed };

struct FilterNoise {
  NoiseMode mode = NoiseMode::learned;
  NoiseModelConfig model;
  Tensor q_fixed;  // stacked diagonals (x axis then y axis, each 2NL interleaved p, v)
  Tensor r_fixed;

  static FilterNoise fixed(Tensor q, Tensor r) {
    FilterNoise n;
    n.mode = NoiseMode::fixed;
    n.q_fixed = std::move(q);
    n.r_fixed = std::move(r);
    return n;
  }
};

struct FilterTrace {
  std::vector<BlockEstimate> estimates;  // t0 .. t0 + L'
  std::vector<BlockEstimate> priors;     // one per filter step
  std::vector<Var> q, r;                 // stacked diagonals per step
};

inline std::vector<nn::ParamSpec> filter_param_specs(std::size_t n_agents, std::size_t horizon,
                                                     const NoiseModelConfig& cfg) {
  const std::size_t dim = 4 * n_agents * horizon;
  auto specs = noise_param_specs("noise_q", dim, cfg);
  for (auto& s : noise_param_specs("noise_r", dim, cfg)) specs.push_back(s);
  return specs;
}

namespace detail {

/// Indices into an [L, N, 2] forecast in block order j = n * L + l.
inline std::vector<std::size_t> axis_indices(std::size_t N, std::size_t L, std::size_t axis) {
  std::vector<std::size_t> idx(N * L);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t l = 0; l < L; ++l) idx[n * L + l] = forecast_index(l, n, axis, N);
  return idx;
}

/// Positions of entries in the stacked 4NL vector: axis * 2NL + 2j (+1 for velocity).
inline std::vector<std::size_t> stacked_indices(std::size_t NL, std::size_t axis, std::size_t component) {
  std::vector<std::size_t> idx(NL);
  for (std::size_t j = 0; j < NL; ++j) idx[j] = axis * 2 * NL + 2 * j + component;
  return idx;
}

/// [p_x, v_x, p_y, v_y] (NL each) -> stacked interleaved 4NL vector.
inline Var stack_axes(const Var& px, const Var& vx, const Var& py, const Var& vy) {
  const std::size_t NL = px.size();
  std::vector<std::size_t> order(4 * NL);
  for (std::size_t ax = 0; ax < 2; ++ax)
    for (std::size_t j = 0; j < NL; ++j) {
      order[ax * 2 * NL + 2 * j] = ax * 2 * NL + j;
      order[ax * 2 * NL + 2 * j + 1] = ax * 2 * NL + NL + j;
    }
  return nn::gather(nn::concat({px, vx, py, vy}), std::move(order));
}

/// Anchor vector matching stack_axes: observed p_t / v_t of the owning agent.
inline Tensor stacked_anchor(const std::vector<Vec2>& pos, const std::vector<Vec2>& vel, std::size_t L) {
  const std::size_t N = pos.size(), NL = N * L;
  Tensor out({4 * NL});
  for (std::size_t ax = 0; ax < 2; ++ax)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t l = 0; l < L; ++l) {
        const std::size_t j = n * L + l;
        out[ax * 2 * NL + 2 * j] = ax == 0 ? pos[n].x : pos[n].y;
        out[ax * 2 * NL + 2 * j + 1] = ax == 0 ? vel[n].x : vel[n].y;
      }
  return out;
}

inline Tensor negated(Tensor t) {
  for (double& x : t.data()) x = -x;
  return t;
}

inline AxisBlocks block_predict(const AxisBlocks& s, const Var& u, const Var& qp, const Var& qv, double dt) {
  using namespace nn;
  AxisBlocks o;
  o.p = add(add(s.p, scale(s.v, dt)), scale(u, 0.5 * dt * dt));
  o.v = add(s.v, scale(u, dt));
  o.a = add(add(add(s.a, scale(s.b, 2.0 * dt)), scale(s.c, dt * dt)), qp);
  o.b = add(s.b, scale(s.c, dt));
  o.c = add(s.c, qv);
  return o;
}

inline AxisBlocks block_update(const AxisBlocks& s, const Var& zp, const Var& zv, const Var& rp, const Var& rv,
                               const std::string& where) {
  using namespace nn;
  const Var s11 = add(s.a, rp);
  const Var s22 = add(s.c, rv);
  const Var det = sub(mul(s11, s22), square(s.b));
  for (double d : det.value().data()) {
    if (!std::isfinite(d) || d <= 0.0) throw NumericError(where + ": innovation covariance is singular");
  }
  // K = P S^-1 with S^-1 = [[s22, -b], [-b, s11]] / det.
  const Var k11 = div(sub(mul(s.a, s22), square(s.b)), det);
  const Var k12 = div(sub(mul(s.b, s11), mul(s.a, s.b)), det);
  const Var k21 = div(sub(mul(s.b, s22), mul(s.c, s.b)), det);
  const Var k22 = div(sub(mul(s.c, s11), square(s.b)), det);
  const Var ip = sub(zp, s.p);
  const Var iv = sub(zv, s.v);
  AxisBlocks o;
  o.p = add(s.p, add(mul(k11, ip), mul(k12, iv)));
  o.v = add(s.v, add(mul(k21, ip), mul(k22, iv)));
  // (I - K) P, then the off-diagonal is averaged.
  const Var one_k11 = add_scalar(scale(k11, -1.0), 1.0);
  const Var one_k22 = add_scalar(scale(k22, -1.0), 1.0);
  o.a = sub(mul(one_k11, s.a), mul(k12, s.b));
  const Var p12 = sub(mul(one_k11, s.b), mul(k12, s.c));
  const Var p21 = sub(mul(one_k22, s.b), mul(k21, s.a));
  o.b = scale(add(p12, p21), 0.5);
  o.c = sub(mul(one_k22, s.c), mul(k21, s.b));
  return o;
}

}  // namespace detail

/// Runs initialisation plus one predict/update per step. Q_t is read from
/// the noise model after it sees S-_t, R_t after it sees T_t.
inline FilterTrace filter_sequence(nn::Tape& tape, nn::ParamStore& params, const FilterSequenceInput& in,
                                   const FilterNoise& noise) {
  const std::size_t N = in.n_agents, L = in.horizon, NL = N * L;
  const nn::Shape fshape{L, N, 2};
  if (N == 0 || L == 0) throw ConfigError("filter needs at least one agent and one forecast step");
  if (in.init_positions.shape() != fshape || in.init_velocities.shape() != fshape) {
    throw DimensionError("filter initial trajectory must be " + nn::shape_string(fshape));
  }
  if (!(in.p0 > 0.0)) throw ConfigError("initial covariance scale p0 must be positive");
  if (noise.mode == NoiseMode::fixed &&
      (noise.q_fixed.shape() != nn::Shape{4 * NL} || noise.r_fixed.shape() != nn::Shape{4 * NL})) {
    throw DimensionError("fixed Q and R diagonals must have " + std::to_string(4 * NL) + " entries");
  }

  std::array<std::vector<std::size_t>, 2> axis_idx{detail::axis_indices(N, L, 0), detail::axis_indices(N, L, 1)};
  const auto pick = [&](const Tensor& t, std::size_t ax) {
    std::vector<double> out(NL);
    for (std::size_t j = 0; j < NL; ++j) out[j] = t[axis_idx[ax][j]];
    return Tensor::vector(std::move(out));
  };

  FilterTrace trace;
  BlockEstimate est;
  for (std::size_t ax = 0; ax < 2; ++ax) {
    est.axis[ax] = {tape.constant(pick(in.init_positions, ax)), tape.constant(pick(in.init_velocities, ax)),
                    tape.constant(Tensor({NL}, in.p0)), tape.constant(Tensor({NL}, 0.0)),
                    tape.constant(Tensor({NL}, in.p0))};
  }
  trace.estimates.push_back(est);

  NoiseModel q_model("noise_q", noise.model), r_model("noise_r", noise.model);
  for (std::size_t k = 0; k < in.steps.size(); ++k) {
    const auto& step = in.steps[k];
    const std::string where = "filter step " + std::to_string(k + 1);
    for (const Var* v : {&step.control, &step.obs_positions, &step.obs_velocities}) {
      if (v->shape() != fshape) throw DimensionError(where + ": forecast must be " + nn::shape_string(fshape));
    }
    if (step.anchor_positions.size() != N || step.anchor_velocities.size() != N) {
      throw DimensionError(where + ": anchor needs one entry per agent");
    }
    for (const Var* v : {&step.control, &step.obs_positions, &step.obs_velocities}) {
      if (!v->value().all_finite()) throw NumericError(where + ": non-finite control or observation");
    }

    // Mean prediction does not depend on Q.
    std::array<Var, 2> u, sp, sv;
    for (std::size_t ax = 0; ax < 2; ++ax) {
      u[ax] = nn::gather(step.control, axis_idx[ax]);
      sp[ax] = nn::add(nn::add(est.axis[ax].p, nn::scale(est.axis[ax].v, in.dt)),
                       nn::scale(u[ax], 0.5 * in.dt * in.dt));
      sv[ax] = nn::add(est.axis[ax].v, nn::scale(u[ax], in.dt));
    }
    std::array<Var, 2> zp, zv;
    for (std::size_t ax = 0; ax < 2; ++ax) {
      zp[ax] = nn::gather(step.obs_positions, axis_idx[ax]);
      zv[ax] = nn::gather(step.obs_velocities, axis_idx[ax]);
    }

    Var qdiag, rdiag;
    if (noise.mode == NoiseMode::fixed) {
      qdiag = tape.constant(noise.q_fixed);
      rdiag = tape.constant(noise.r_fixed);
    } else {
      const Tensor anchor = detail::negated(detail::stacked_anchor(step.anchor_positions, step.anchor_velocities, L));
      qdiag = q_model.step(tape, params, nn::add_const(detail::stack_axes(sp[0], sv[0], sp[1], sv[1]), anchor));
      rdiag = r_model.step(tape, params, nn::add_const(detail::stack_axes(zp[0], zv[0], zp[1], zv[1]), anchor));
    }
    trace.q.push_back(qdiag);
    trace.r.push_back(rdiag);

    BlockEstimate prior, post;
    for (std::size_t ax = 0; ax < 2; ++ax) {
      const Var qp = nn::gather(qdiag, detail::stacked_indices(NL, ax, 0));
      const Var qv = nn::gather(qdiag, detail::stacked_indices(NL, ax, 1));
      const Var rp = nn::gather(rdiag, detail::stacked_indices(NL, ax, 0));
      const Var rv = nn::gather(rdiag, detail::stacked_indices(NL, ax, 1));
      prior.axis[ax] = detail::block_predict(est.axis[ax], u[ax], qp, qv, in.dt);
      post.axis[ax] = detail::block_update(prior.axis[ax], zp[ax], zv[ax], rp, rv,
                                           where + (ax == 0 ? " (x axis)" : " (y axis)"));
    }
    trace.priors.push_back(prior);
    trace.estimates.push_back(post);
    est = post;
  }
  return trace;
}

/// Dense view of one axis: mean in stacked order and the full covariance.
inline FilterEstimate to_dense(const AxisBlocks& s) {
  const std::size_t NL = s.p.size();
  FilterEstimate out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * NL)),
                     Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * NL), static_cast<Eigen::Index>(2 * NL))};
  for (std::size_t j = 0; j < NL; ++j) {
    const auto i = static_cast<Eigen::Index>(2 * j);
    out.mean(i) = s.p.value()[j];
    out.mean(i + 1) = s.v.value()[j];
    out.cov(i, i) = s.a.value()[j];
    out.cov(i, i + 1) = out.cov(i + 1, i) = s.b.value()[j];
    out.cov(i + 1, i + 1) = s.c.value()[j];
  }
  return out;
}

/// Positions or velocities of an estimate as an [L, N, 2] tensor.
inline Tensor estimate_field(const BlockEstimate& e, std::size_t n_agents, std::size_t horizon, bool velocities) {
  Tensor out({horizon, n_agents, 2});
  for (std::size_t ax = 0; ax < 2; ++ax) {
    const Tensor& src = velocities ? e.axis[ax].v.value() : e.axis[ax].p.value();
    for (std::size_t n = 0; n < n_agents; ++n)
      for (std::size_t l = 0; l < horizon; ++l) out[forecast_index(l, n, ax, n_agents)] = src[n * horizon + l];
  }
  return out;
}

/// Marginal position variances (pp blocks) as [L, N, 2].
inline Tensor estimate_position_variance(const BlockEstimate& e, std::size_t n_agents, std::size_t horizon) {
  Tensor out({horizon, n_agents, 2});
  for (std::size_t ax = 0; ax < 2; ++ax)
    for (std::size_t n = 0; n < n_agents; ++n)
      for (std::size_t l = 0; l < horizon; ++l)
        out[forecast_index(l, n, ax, n_agents)] = e.axis[ax].a.value()[n * horizon + l];
  return out;
}

}  // namespace iaknn
