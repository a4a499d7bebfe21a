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

#include <string>
#include <vector>

#include "vip/core/ops.hpp"
#include "vip/core/rng.hpp"
#include "vip/core/tape.hpp"

namespace vip::core::nn {

struct Linear {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

  Linear() = default;
  Linear(const std::string& name, int in, int out, Group g, RngStream& init);

  Var operator()(Tape& t, Var x) const;
  void collect(std::vector<Parameter*>& out);
};

struct LayerNorm {
  Parameter gamma;
  Parameter beta;

  LayerNorm() = default;
  LayerNorm(const std::string& name, int width, Group g);

  Var operator()(Tape& t, Var x) const;
  void collect(std::vector<Parameter*>& out);
};

struct SelfAttention {
  Linear q, k, v, o;

  SelfAttention() = default;
  SelfAttention(const std::string& name, int width, Group g, RngStream& init);

  // Keys/values come from `memory`; pass the same Var as `x` for self attention.
  Var operator()(Tape& t, Var x, Var memory, int heads, bool causal) const;
  void collect(std::vector<Parameter*>& out);
};

struct FeedForward {
  Linear up, down;

  FeedForward() = default;
  FeedForward(const std::string& name, int width, int hidden, Group g, RngStream& init);

  Var operator()(Tape& t, Var x) const;
  void collect(std::vector<Parameter*>& out);
};

// Pre-norm block: x + drop(attn(ln(x))), then x + drop(ffn(ln(x))).
struct EncoderBlock {
  LayerNorm ln_attn;
  SelfAttention attn;
  LayerNorm ln_ffn;
  FeedForward ffn;

  EncoderBlock() = default;
  EncoderBlock(const std::string& name, int width, int hidden, Group g, RngStream& init);

  void collect(std::vector<Parameter*>& out);
};

struct DecoderBlock {
  LayerNorm ln_self;
  SelfAttention self_attn;
  LayerNorm ln_cross;
  SelfAttention cross_attn;
  LayerNorm ln_ffn;
  FeedForward ffn;

  DecoderBlock() = default;
  DecoderBlock(const std::string& name, int width, int hidden, Group g, RngStream& init);

  void collect(std::vector<Parameter*>& out);
};

// rng may be null when train_mode is false or dropout_rate is 0.
Var transformer_encoder_block(Tape& t, Var x, const EncoderBlock& block, int heads,
                              double dropout_rate, bool train_mode, RngStream* rng);

Var transformer_decoder_block(Tape& t, Var y, Var memory, const DecoderBlock& block, int heads);

// Trainable scalar count of a pre-norm encoder block at this width.
std::size_t encoder_block_param_count(int width, int hidden);

}  // namespace vip::core::nn
