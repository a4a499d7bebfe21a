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
#include <vector>

#include "vip/core/tape.hpp"

namespace vip::core {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  std::size_t entries = 0;
  // Entry attaining max_rel_error.
  std::string worst_param;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares reverse-mode gradients against central differences for every
// entry of every listed parameter:
//   max |analytic - numeric| / max(|analytic|, |numeric|, floor, scale_floor * G)
// with G the largest analytic magnitude. The last term keeps entries that are
// exactly zero by symmetry (e.g. attention key biases) from dividing
// round-off noise by a tiny number.
// `f` must rebuild its graph on the given tape and be deterministic (reset any
// RNG inside f). Parameter values are restored on return.
GradCheckResult grad_check(const std::function<Var(Tape&)>& f,
                           const std::vector<Parameter*>& params, double eps = 1e-5, double floor = 1e-8,
                           double scale_floor = 1e-5);

// Reverse-mode gradients of `analytic` against central differences of
// `numeric`. For estimators whose backward pass is not the derivative of the
// forward value (straight-through), `numeric` is a smooth surrogate with the
// same value and intended derivative at the current point.
GradCheckResult grad_check(const std::function<Var(Tape&)>& analytic, const std::function<Var(Tape&)>& numeric,
                           const std::vector<Parameter*>& params, double eps = 1e-5, double floor = 1e-8,
                           double scale_floor = 1e-5);

}  // namespace vip::core
