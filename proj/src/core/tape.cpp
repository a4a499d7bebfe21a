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

#include "vip/core/tape.hpp"

#include "vip/core/error.hpp"

namespace vip::core {

const Matrix& Var::value() const {
  require(tape_ != nullptr, ErrorCode::kRuntime, "use of an empty Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  require(v.size() == 1, ErrorCode::kRuntime, "scalar() on non-scalar " + shape_str(v));
  return v(0, 0);
}

Var Tape::push(Matrix value, bool requires_grad, BackwardFn fn, std::string_view op) {
  if (round_f32_) value = value.cast<float>().cast<double>();
  if (!value.allFinite()) {
    fail(ErrorCode::kRuntime, std::string(op) + ": non-finite output " + shape_str(value));
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = grad_enabled_ && requires_grad;
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  backward_done_ = false;
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  return push(std::move(value), false, nullptr, "constant");
}

Var Tape::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  Var v = push(p.value, p.trainable, nullptr, "param");
  nodes_[v.id()].param = &p;
  param_nodes_.emplace(&p, v.id());
  return v;
}

void Tape::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var loss) {
  require(loss.valid() && loss.tape() == this, ErrorCode::kRuntime,
          "backward: loss was not produced by a forward pass on this tape");
  require(!backward_done_, ErrorCode::kRuntime, "backward: already run on this tape");
  const Matrix& lv = value(loss.id());
  require(lv.size() == 1, ErrorCode::kRuntime, "backward: loss must be scalar, got " + shape_str(lv));
  backward_done_ = true;
  for (const auto& [param, id] : param_nodes_)
    if (param->trainable && (param->grad.rows() != param->value.rows() || param->grad.cols() != param->value.cols()))
      param->zero_grad();
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      n.param->grad += n.grad;
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
  backward_done_ = false;
}

}  // namespace vip::core
