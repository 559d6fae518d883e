#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iaknn/errors.hpp"
#include "iaknn/nn/tensor.hpp"

namespace iaknn::nn {

/// Decides the initialiser applied by init_params.
enum class ParamKind { lstm_weight, weight, bias };

inline const char* to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::lstm_weight: return "lstm_weight";
    case ParamKind::weight: return "weight";
    case ParamKind::bias: return "bias";
  }
  return "weight";
}

inline ParamKind param_kind_from_string(const std::string& s) {
  if (s == "lstm_weight") return ParamKind::lstm_weight;
  if (s == "weight") return ParamKind::weight;
  if (s == "bias") return ParamKind::bias;
  throw ConfigError("unknown parameter kind '" + s + "'");
}

/// A trainable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  Tensor value;
  Tensor grad;
  Tensor m;
  Tensor v;
  ParamKind kind = ParamKind::weight;
};

/// Named parameters in deterministic (lexicographic) order.
class ParamStore {
 public:
  using Map = std::map<std::string, Parameter>;

  Parameter& add(const std::string& name, Tensor value, ParamKind kind) {
    if (params_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
    Parameter p;
    p.grad = Tensor(value.shape());
    p.m = Tensor(value.shape());
    p.v = Tensor(value.shape());
    p.value = std::move(value);
    p.kind = kind;
    return params_.emplace(name, std::move(p)).first->second;
  }

  bool contains(const std::string& name) const { return params_.contains(name); }

  Parameter& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Parameter& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  std::uint64_t step() const noexcept { return step_; }
  void set_step(std::uint64_t s) noexcept { step_ = s; }
  void increment_step() noexcept { ++step_; }

  void zero_grad() {
    for (auto& [name, p] : params_) p.grad.fill(0.0);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += p.value.size();
    return n;
  }

  /// Parameter values only; gradients and moments are ignored.
  bool same_values(const ParamStore& other) const {
    if (params_.size() != other.params_.size()) return false;
    for (const auto& [name, p] : params_) {
      auto it = other.params_.find(name);
      if (it == other.params_.end() || !(it->second.value == p.value)) return false;
    }
    return true;
  }

 private:
  Map params_;
  std::uint64_t step_ = 0;
};

/// Shape and initialiser for one parameter. fan_in/fan_out feed Xavier.
struct ParamSpec {
  std::string name;
  Shape shape;
  ParamKind kind = ParamKind::weight;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
};

inline constexpr double kLstmInitRange = 0.001;

/// Uniform double in [0, 1) from the top 53 bits; independent of the standard
/// library's distribution implementation.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// LSTM weights ~ U(-0.001, 0.001), other weights Xavier-uniform, biases 0.
inline ParamStore init_params(std::span<const ParamSpec> specs, std::mt19937_64& rng) {
  ParamStore store;
  for (const auto& spec : specs) {
    Tensor t(spec.shape);
    switch (spec.kind) {
      case ParamKind::bias:
        break;
      case ParamKind::lstm_weight:
        for (double& x : t.data()) x = uniform(rng, -kLstmInitRange, kLstmInitRange);
        break;
      case ParamKind::weight: {
        if (spec.fan_in + spec.fan_out == 0) {
          throw ConfigError("parameter '" + spec.name + "' needs fan_in/fan_out for Xavier init");
        }
        const double bound = std::sqrt(6.0 / static_cast<double>(spec.fan_in + spec.fan_out));
        for (double& x : t.data()) x = uniform(rng, -bound, bound);
        break;
      }
    }
    store.add(spec.name, std::move(t), spec.kind);
  }
  return store;
}

}  // namespace iaknn::nn
