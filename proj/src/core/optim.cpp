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

#include "vip/core/optim.hpp"

#include <cmath>

#include "vip/core/error.hpp"

namespace vip::core {

Optimizer::Optimizer(OptimizerKind kind, GroupRates rates, std::vector<Parameter*> params,
                     double beta1, double beta2, double eps)
    : kind_(kind), rates_(rates), params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Parameter* p : params_) {
    require(p->group != Group::kCodebook, ErrorCode::kRuntime,
            "optimizer: codebook parameter '" + p->name + "' is EMA-only");
    require(p->trainable, ErrorCode::kRuntime,
            "optimizer: parameter '" + p->name + "' is not trainable");
  }
  if (kind_ == OptimizerKind::kAdam) {
    for (const Parameter* p : params_) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
}

void Optimizer::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Optimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.grad.size() == 0) continue;
    const double lr = rates_.rate(p.group);
    if (kind_ == OptimizerKind::kSgd) {
      p.value.noalias() -= lr * p.grad;
    } else {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
      p.value.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
    }
  }
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    if (p->grad.size() != 0) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params)
      if (p->grad.size() != 0) p->grad *= s;
  }
  return norm;
}

}  // namespace vip::core
