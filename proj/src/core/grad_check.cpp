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

#include "vip/core/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "vip/core/error.hpp"

namespace vip::core {

GradCheckResult grad_check(const std::function<Var(Tape&)>& f,
                           const std::vector<Parameter*>& params, double eps, double floor, double scale_floor) {
  return grad_check(f, f, params, eps, floor, scale_floor);
}

GradCheckResult grad_check(const std::function<Var(Tape&)>& analytic, const std::function<Var(Tape&)>& f,
                           const std::vector<Parameter*>& params, double eps, double floor, double scale_floor) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = analytic(tape);
    tape.backward(loss);
  }
  auto eval = [&f]() {
    Tape tape(false);
    const double v = f(tape).scalar();
    require(std::isfinite(v), ErrorCode::kRuntime, "grad_check: non-finite function value");
    return v;
  };
  GradCheckResult r;
  for (Parameter* p : params)
    if (p->trainable) r.max_abs_analytic = std::max(r.max_abs_analytic, p->grad.cwiseAbs().maxCoeff());
  const double base = std::max(floor, scale_floor * r.max_abs_analytic);
  for (Parameter* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& x = p->value.data()[i];
      const double saved = x;
      x = saved + eps;
      const double up = eval();
      x = saved - eps;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->trainable ? p->grad.data()[i] : 0.0;
      const double denom = std::max({std::abs(analytic), std::abs(numeric), base});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > r.max_rel_error || r.worst_index < 0) {
        r.max_rel_error = std::max(r.max_rel_error, rel);
        r.worst_param = p->name;
        r.worst_index = i;
        r.worst_analytic = analytic;
        r.worst_numeric = numeric;
      }
      ++r.entries;
    }
  }
  return r;
}

}  // namespace vip::core
