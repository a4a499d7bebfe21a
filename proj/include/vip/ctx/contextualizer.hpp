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

#include "vip/core/nn.hpp"

namespace vip::ctx {

using core::Matrix;
using core::Parameter;
using core::Tape;
using core::Var;

struct ContextualizerConfig {
  int d = 64;          // PLM embedding width
  int d_low = 16;      // working width of the encoder
  int layers = 2;
  int heads = 4;
  int ffn_dim = 32;    // 2 * d_low
  double dropout = 0.1;
  bool use_dropout = false;  // forced on by noise-resilience training
  // Multiplier on the output projection's initial weight scale.
  double output_init_scale = 0.1;

  void validate() const;
  friend bool operator==(const ContextualizerConfig&, const ContextualizerConfig&) = default;
};

// Small transformer sentence encoder mapping [P, X] to input-contextualized
// prompts. Shares one d -> d_low projection between prompt and input rows and
// uses no position encodings, so it is permutation-equivariant in the prompt
// rows.
class Contextualizer {
 public:
  Contextualizer(const ContextualizerConfig& cfg, core::RngStream& init);

  const ContextualizerConfig& config() const { return cfg_; }

  // P: n x d, X: L x d. Returns the first n output rows (n x d). Dropout is
  // applied only when train_mode is true and the config enables it.
  Var contextualize(Tape& t, Var prompts, Var inputs, bool train_mode, core::RngStream* rng) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  ContextualizerConfig cfg_;
  core::nn::Linear in_proj_;
  std::vector<core::nn::EncoderBlock> blocks_;
  core::nn::Linear out_proj_;
};

// Exact trainable scalar count for this layer layout.
std::size_t param_count(const ContextualizerConfig& cfg);

// Noise-resilience loss over two dropout passes of the same batch. For anchor
// i, with sym(a, b) the mean over prompt rows of the negative Euclidean
// distance:
//   l_i = -log( e^{sym(i,i+)} / sum_j (e^{sym(i,j)} + e^{sym(i,j+)}) )
// Returns the batch mean of l_i.
Var nr_loss(std::span<const Var> first, std::span<const Var> second);

// Mean over rows of the negative row-wise Euclidean distance.
Var similarity(Var a, Var b);

}  // namespace vip::ctx
