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

#include <span>
#include <vector>

#include "vip/core/rng.hpp"
#include "vip/core/tape.hpp"

// Differentiable primitives. All operate on 2-D values (rows x cols); a
// scalar is 1x1. Shape violations throw vip::Error naming the op and shapes.
namespace vip::core::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
// Adds a 1 x c row to every row of a.
Var add_row(Var a, Var row);

Var matmul(Var a, Var b);
// x W + b with W: in x out, b: 1 x out.
Var linear(Var x, Var w, Var b);

Var gelu(Var a);
Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);

Var softmax_rows(Var a);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// Multi-head scaled dot-product attention over already-projected q (L x d),
// k and v (S x d). With causal set, query i only sees keys j <= i.
Var attention(Var q, Var k, Var v, int heads, bool causal);

// Inverted dropout. Identity when rate == 0.
Var dropout(Var a, double rate, RngStream& rng);

Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
// Row lookup; the backward pass scatter-adds into the table if it is
// trainable.
Var gather_rows(Var table, std::span<const int> ids);

Var sum(Var a);
Var mean(Var a);
Var sum_squares(Var a);
// Mean over rows, giving 1 x c.
Var mean_rows(Var a);
// Euclidean norm of each row, giving L x 1. The gradient at a zero row is 0.
Var row_norms(Var a);
// log(sum(exp(a))) over all entries, giving 1x1.
Var logsumexp(Var a);

// Identity forward, zero backward.
Var stop_gradient(Var a);
// Forward value `forward`, backward passes the incoming gradient unchanged
// to `through`. Shapes must agree.
Var straight_through(const Matrix& forward, Var through);

// Mean token cross-entropy of logits (T x V) against targets; positions whose
// target equals ignore_id are masked. Throws if every position is masked.
Var cross_entropy(Var logits, std::span<const int> targets, int ignore_id);

}  // namespace vip::core::ops
