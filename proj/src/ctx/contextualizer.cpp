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

#include "vip/ctx/contextualizer.hpp"

#include <array>

#include "vip/core/error.hpp"

namespace vip::ctx {

namespace ops = core::ops;
using core::Group;

void ContextualizerConfig::validate() const {
  require(d > 0 && d_low > 0 && layers > 0 && heads > 0 && ffn_dim > 0, ErrorCode::kConfig,
          "contextualizer: sizes must be positive");
  require(d_low < d, ErrorCode::kConfig, "contextualizer: d_low must be smaller than d");
  require(d_low % heads == 0, ErrorCode::kConfig, "contextualizer: d_low must be divisible by heads");
  require(dropout >= 0.0 && dropout < 1.0, ErrorCode::kConfig, "contextualizer: dropout must be in [0,1)");
  require(output_init_scale >= 0.0, ErrorCode::kConfig, "contextualizer: output_init_scale must be >= 0");
}

Contextualizer::Contextualizer(const ContextualizerConfig& cfg, core::RngStream& init) : cfg_(cfg) {
  cfg_.validate();
  in_proj_ = core::nn::Linear("ctx.in", cfg_.d, cfg_.d_low, Group::kEncoder, init);
  for (int l = 0; l < cfg_.layers; ++l)
    blocks_.emplace_back("ctx.block" + std::to_string(l), cfg_.d_low, cfg_.ffn_dim, Group::kEncoder, init);
  out_proj_ = core::nn::Linear("ctx.out", cfg_.d_low, cfg_.d, Group::kEncoder, init);
  out_proj_.weight.value *= cfg_.output_init_scale;
}

Var Contextualizer::contextualize(Tape& t, Var prompts, Var inputs, bool train_mode,
                                  core::RngStream* rng) const {
  require(prompts.cols() == cfg_.d && inputs.cols() == cfg_.d, ErrorCode::kRuntime,
          "contextualize: widths " + std::to_string(prompts.cols()) + "/" + std::to_string(inputs.cols()) +
              " do not match d=" + std::to_string(cfg_.d));
  require(prompts.rows() >= 1 && inputs.rows() >= 1, ErrorCode::kRuntime,
          "contextualize: need at least one prompt row and one input row");
  const std::array<Var, 2> parts{prompts, inputs};
  Var h = in_proj_(t, ops::concat_rows(parts));
  const double rate = cfg_.use_dropout ? cfg_.dropout : 0.0;
  for (const auto& b : blocks_) h = core::nn::transformer_encoder_block(t, h, b, cfg_.heads, rate, train_mode, rng);
  return out_proj_(t, ops::slice_rows(h, 0, prompts.rows()));
}

std::vector<Parameter*> Contextualizer::parameters() {
  std::vector<Parameter*> out;
  in_proj_.collect(out);
  for (auto& b : blocks_) b.collect(out);
  out_proj_.collect(out);
  return out;
}

std::vector<const Parameter*> Contextualizer::parameters() const {
  auto ps = const_cast<Contextualizer*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::size_t param_count(const ContextualizerConfig& cfg) {
  const auto d = static_cast<std::size_t>(cfg.d);
  const auto dl = static_cast<std::size_t>(cfg.d_low);
  return (d * dl + dl) + static_cast<std::size_t>(cfg.layers) * core::nn::encoder_block_param_count(cfg.d_low, cfg.ffn_dim) +
         (dl * d + d);
}

Var similarity(Var a, Var b) { return ops::scale(ops::mean(ops::row_norms(ops::sub(a, b))), -1.0); }

Var nr_loss(std::span<const Var> first, std::span<const Var> second) {
  const std::size_t B = first.size();
  require(B > 0, ErrorCode::kRuntime, "nr_loss: empty batch");
  require(second.size() == B, ErrorCode::kRuntime, "nr_loss: pass sizes differ");
  std::vector<Var> losses;
  losses.reserve(B);
  for (std::size_t i = 0; i < B; ++i) {
    std::vector<Var> logits;
    logits.reserve(2 * B);
    Var positive;
    for (std::size_t j = 0; j < B; ++j) {
      logits.push_back(similarity(first[i], first[j]));
      Var cross = similarity(first[i], second[j]);
      if (j == i) positive = cross;
      logits.push_back(cross);
    }
    losses.push_back(ops::sub(ops::logsumexp(ops::concat_cols(logits)), positive));
  }
  return ops::scale(ops::sum(ops::concat_rows(losses)), 1.0 / static_cast<double>(B));
}

}  // namespace vip::ctx
