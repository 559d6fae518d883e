#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iaknn/errors.hpp"
#include "iaknn/nn/ops.hpp"
#include "iaknn/nn/params.hpp"
#include "iaknn/nn/tape.hpp"

namespace iaknn::nn {

enum class Activation { identity, relu, tanh, sigmoid };

inline Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::sigmoid: return sigmoid(x);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Fully connected: prefix.W [out x in], prefix.b [out]
// ---------------------------------------------------------------------------

inline std::vector<ParamSpec> fc_param_specs(const std::string& prefix, std::size_t in, std::size_t out) {
  return {{prefix + ".W", {out, in}, ParamKind::weight, in, out}, {prefix + ".b", {out}, ParamKind::bias, 0, 0}};
}

inline Var fc_forward(Tape& tape, const Var& x, ParamStore& params, const std::string& prefix,
                      Activation act = Activation::identity) {
  const std::string wname = prefix + ".W";
  const std::string bname = prefix + ".b";
  const Tensor& W = params.at(wname).value;
  const Tensor& b = params.at(bname).value;
  if (W.rank() != 2 || W.dim(1) != x.size()) {
    throw DimensionError("parameter '" + wname + "' has shape " + shape_string(W.shape()) +
                         " but the input has width " + std::to_string(x.size()));
  }
  if (b.size() != W.dim(0)) {
    throw DimensionError("parameter '" + bname + "' has length " + std::to_string(b.size()) + ", expected " +
                         std::to_string(W.dim(0)));
  }
  Var y = add(matvec(tape.parameter(params, wname), x), tape.parameter(params, bname));
  return activate(y, act);
}

// ---------------------------------------------------------------------------
// Convolution: prefix.W [k x k x Cin x Cout], prefix.b [Cout]
// ---------------------------------------------------------------------------

inline std::vector<ParamSpec> conv_param_specs(const std::string& prefix, std::size_t kernel, std::size_t in_channels,
                                               std::size_t out_channels) {
  return {{prefix + ".W",
           {kernel, kernel, in_channels, out_channels},
           ParamKind::weight,
           kernel * kernel * in_channels,
           kernel * kernel * out_channels},
          {prefix + ".b", {out_channels}, ParamKind::bias, 0, 0}};
}

inline Var conv2d_forward(Tape& tape, const Var& input, ParamStore& params, const std::string& prefix,
                          std::size_t stride = 1, std::size_t padding = 0,
                          Activation act = Activation::identity) {
  Var y = conv2d(input, tape.parameter(params, prefix + ".W"), tape.parameter(params, prefix + ".b"), stride,
                 padding);
  return activate(y, act);
}

// ---------------------------------------------------------------------------
// LSTM cell: prefix.W [4H x (I + H)], prefix.b [4H]; gate order i, f, g, o.
// ---------------------------------------------------------------------------

struct LstmState {
  Var hidden;
  Var cell;
};

inline std::vector<ParamSpec> lstm_param_specs(const std::string& prefix, std::size_t input, std::size_t hidden) {
  return {{prefix + ".W", {4 * hidden, input + hidden}, ParamKind::lstm_weight, input + hidden, 4 * hidden},
          {prefix + ".b", {4 * hidden}, ParamKind::bias, 0, 0}};
}

inline LstmState lstm_zero_state(Tape& tape, std::size_t hidden) {
  return {tape.constant(Tensor({hidden})), tape.constant(Tensor({hidden}))};
}

inline LstmState lstm_step(Tape& tape, const Var& x, const LstmState& state, ParamStore& params,
                           const std::string& prefix) {
  const std::string wname = prefix + ".W";
  const std::string bname = prefix + ".b";
  const Tensor& W = params.at(wname).value;
  const Tensor& b = params.at(bname).value;
  const std::size_t H = state.hidden.size();
  if (state.cell.size() != H) {
    throw DimensionError("LSTM '" + prefix + "': cell width " + std::to_string(state.cell.size()) +
                         " != hidden width " + std::to_string(H));
  }
  if (W.rank() != 2 || W.dim(0) != 4 * H || W.dim(1) != x.size() + H) {
    throw DimensionError("parameter '" + wname + "' has shape " + shape_string(W.shape()) + ", expected [" +
                         std::to_string(4 * H) + "x" + std::to_string(x.size() + H) + "]");
  }
  if (b.size() != 4 * H) {
    throw DimensionError("parameter '" + bname + "' has length " + std::to_string(b.size()) + ", expected " +
                         std::to_string(4 * H));
  }
  Var z = add(matvec(tape.parameter(params, wname), concat({x, state.hidden})), tape.parameter(params, bname));
  Var i = sigmoid(slice(z, 0, H));
  Var f = sigmoid(slice(z, H, H));
  Var g = tanh(slice(z, 2 * H, H));
  Var o = sigmoid(slice(z, 3 * H, H));
  Var c = add(mul(f, state.cell), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

}  // namespace iaknn::nn
