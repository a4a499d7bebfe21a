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

#include <map>
#include <vector>

#include "vip/core/tensor.hpp"

namespace vip::core {

enum class OptimizerKind { kSgd, kAdam };

struct GroupRates {
  double prompt = 0.3;
  double other = 1e-3;

  double rate(Group g) const { return g == Group::kPrompt ? prompt : other; }
};

// Gradient-descent update over an explicit parameter set. Codebook-group
// parameters are rejected at construction (they follow EMA), as is anything
// not marked trainable.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, GroupRates rates, std::vector<Parameter*> params,
            double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  void step();

  const GroupRates& rates() const { return rates_; }
  void set_rates(GroupRates rates) { rates_ = rates; }
  const std::vector<Parameter*>& parameters() const { return params_; }
  OptimizerKind kind() const { return kind_; }
  long steps() const { return t_; }

 private:
  OptimizerKind kind_;
  GroupRates rates_;
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_, v_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

// Rescales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace vip::core
