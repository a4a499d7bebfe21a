// Copyright 2026 The viplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vip/core/tensor.hpp"

namespace vip::core {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives and has not been cleared.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so walking them
// backwards is a reverse topological order and visits each node once.
//
// With grad disabled no backward closures are stored; use it for inference.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a parameter. Repeated calls on the same parameter return the
  // same node. Gradient flows only if the parameter is trainable.
  Var param(const Parameter& p);

  // Propagates from a 1x1 loss. Parameter gradients are accumulated into
  // Parameter::grad (which is zero-initialized if empty).
  void backward(Var loss);

  bool grad_enabled() const { return grad_enabled_; }
  // Emulated single precision: every recorded value is rounded to float.
  void set_round_f32(bool on) { round_f32_ = on; }
  bool round_f32() const { return round_f32_; }

  std::size_t size() const { return nodes_.size(); }
  void clear();

  // Op implementation interface.
  Var push(Matrix value, bool requires_grad, BackwardFn fn, std::string_view op);
  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Gradient of the loss with respect to node `id`; zero-sized if never
  // reached.
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  void accumulate(int id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    const Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool grad_enabled_;
  bool round_f32_ = false;
  bool backward_done_ = false;
};

}  // namespace vip::core
