#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "iaknn/errors.hpp"
#include "iaknn/nn/params.hpp"
#include "iaknn/nn/tensor.hpp"

namespace iaknn::nn {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Operation tape for reverse-mode differentiation. Each recorded node keeps
/// its forward value and a closure that pushes its output gradient to its
/// inputs. Parameters are bound leaves whose gradients are accumulated into
/// the owning ParamStore by backward().
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(std::move(value), nullptr); }

  /// Leaf bound to `store[name]`. Repeated calls return the same node.
  Var parameter(ParamStore& store, const std::string& name) {
    auto key = std::make_pair(&store, name);
    if (auto it = bound_.find(key); it != bound_.end()) return Var(this, it->second);
    Var v = push(store.at(name).value, nullptr);
    bound_.emplace(std::move(key), v.id());
    return v;
  }

  Var record(Tensor value, BackwardFn backward) { return push(std::move(value), std::move(backward)); }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }

  /// Gradient buffer of a node, allocated on first use.
  Tensor& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  bool has_grad(std::size_t id) const { return nodes_[id].grad.size() == nodes_[id].value.size() && !nodes_[id].value.empty(); }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Propagates d(loss)/d(node) through the tape and adds seed * dL/dp to
  /// every bound parameter's gradient.
  void backward(const Var& loss, double seed = 1.0) {
    if (nodes_.empty()) throw StateError("backward called on an empty tape (no forward pass recorded)");
    if (&loss.tape() != this) throw StateError("backward called with a value from another tape");
    if (loss.size() != 1) throw DimensionError("backward needs a scalar loss, got " + shape_string(loss.shape()));
    for (auto& n : nodes_) n.grad = Tensor();
    grad(loss.id())[0] = seed;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && has_grad(i)) n.backward(*this, i);
    }
    for (const auto& [key, id] : bound_) {
      if (!has_grad(id)) continue;
      Tensor& dst = key.first->at(key.second).grad;
      const Tensor& g = nodes_[id].grad;
      for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
  };

  Var push(Tensor value, BackwardFn backward) {
    nodes_.push_back(Node{std::move(value), Tensor(), std::move(backward)});
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::map<std::pair<ParamStore*, std::string>, std::size_t> bound_;
};

inline const Tensor& Var::value() const {
  if (!tape_) throw StateError("use of an unbound Var");
  return tape_->value(id_);
}

}  // namespace iaknn::nn
