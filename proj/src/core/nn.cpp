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

#include "vip/core/nn.hpp"

#include <cmath>

#include "vip/core/error.hpp"

namespace vip::core::nn {
namespace {

Matrix normal_init(int rows, int cols, double stddev, RngStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
  return m;
}

}  // namespace

Linear::Linear(const std::string& name, int in, int out, Group g, RngStream& init)
    : weight(name + ".weight", normal_init(in, out, 1.0 / std::sqrt(static_cast<double>(in)), init), g),
      bias(name + ".bias", Matrix::Zero(1, out), g) {}

Var Linear::operator()(Tape& t, Var x) const {
  return ops::linear(x, t.param(weight), t.param(bias));
}

void Linear::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

LayerNorm::LayerNorm(const std::string& name, int width, Group g)
    : gamma(name + ".gamma", Matrix::Ones(1, width), g),
      beta(name + ".beta", Matrix::Zero(1, width), g) {}

Var LayerNorm::operator()(Tape& t, Var x) const {
  return ops::layer_norm(x, t.param(gamma), t.param(beta), 1e-5);
}

void LayerNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

SelfAttention::SelfAttention(const std::string& name, int width, Group g, RngStream& init)
    : q(name + ".q", width, width, g, init),
      k(name + ".k", width, width, g, init),
      v(name + ".v", width, width, g, init),
      o(name + ".o", width, width, g, init) {}

Var SelfAttention::operator()(Tape& t, Var x, Var memory, int heads, bool causal) const {
  Var qx = q(t, x);
  Var kx = k(t, memory);
  Var vx = v(t, memory);
  return o(t, ops::attention(qx, kx, vx, heads, causal));
}

void SelfAttention::collect(std::vector<Parameter*>& out) {
  q.collect(out);
  k.collect(out);
  v.collect(out);
  o.collect(out);
}

FeedForward::FeedForward(const std::string& name, int width, int hidden, Group g, RngStream& init)
    : up(name + ".up", width, hidden, g, init), down(name + ".down", hidden, width, g, init) {}

Var FeedForward::operator()(Tape& t, Var x) const { return down(t, ops::gelu(up(t, x))); }

void FeedForward::collect(std::vector<Parameter*>& out) {
  up.collect(out);
  down.collect(out);
}

EncoderBlock::EncoderBlock(const std::string& name, int width, int hidden, Group g, RngStream& init)
    : ln_attn(name + ".ln_attn", width, g),
      attn(name + ".attn", width, g, init),
      ln_ffn(name + ".ln_ffn", width, g),
      ffn(name + ".ffn", width, hidden, g, init) {}

void EncoderBlock::collect(std::vector<Parameter*>& out) {
  ln_attn.collect(out);
  attn.collect(out);
  ln_ffn.collect(out);
  ffn.collect(out);
}

DecoderBlock::DecoderBlock(const std::string& name, int width, int hidden, Group g, RngStream& init)
    : ln_self(name + ".ln_self", width, g),
      self_attn(name + ".self_attn", width, g, init),
      ln_cross(name + ".ln_cross", width, g),
      cross_attn(name + ".cross_attn", width, g, init),
      ln_ffn(name + ".ln_ffn", width, g),
      ffn(name + ".ffn", width, hidden, g, init) {}

void DecoderBlock::collect(std::vector<Parameter*>& out) {
  ln_self.collect(out);
  self_attn.collect(out);
  ln_cross.collect(out);
  cross_attn.collect(out);
  ln_ffn.collect(out);
  ffn.collect(out);
}

Var transformer_encoder_block(Tape& t, Var x, const EncoderBlock& block, int heads,
                              double dropout_rate, bool train_mode, RngStream* rng) {
  const auto width = x.cols();
  require(heads > 0 && width % heads == 0, ErrorCode::kRuntime,
          "encoder block: width " + std::to_string(width) + " not divisible by " +
              std::to_string(heads) + " heads");
  const bool drop = train_mode && dropout_rate > 0.0;
  require(!drop || rng != nullptr, ErrorCode::kRuntime, "encoder block: dropout needs an rng");
  Var h = block.ln_attn(t, x);
  Var a = block.attn(t, h, h, heads, false);
  if (drop) a = ops::dropout(a, dropout_rate, *rng);
  x = ops::add(x, a);
  Var f = block.ffn(t, block.ln_ffn(t, x));
  if (drop) f = ops::dropout(f, dropout_rate, *rng);
  return ops::add(x, f);
}

Var transformer_decoder_block(Tape& t, Var y, Var memory, const DecoderBlock& block, int heads) {
  Var h = block.ln_self(t, y);
  y = ops::add(y, block.self_attn(t, h, h, heads, true));
  y = ops::add(y, block.cross_attn(t, block.ln_cross(t, y), memory, heads, false));
  return ops::add(y, block.ffn(t, block.ln_ffn(t, y)));
}

std::size_t encoder_block_param_count(int width, int hidden) {
  const auto w = static_cast<std::size_t>(width);
  const auto h = static_cast<std::size_t>(hidden);
  const std::size_t layer_norms = 2 * 2 * w;
  const std::size_t attention = 4 * (w * w + w);
  const std::size_t ffn = (w * h + h) + (h * w + w);
  return layer_norms + attention + ffn;
}

}  // namespace vip::core::nn
