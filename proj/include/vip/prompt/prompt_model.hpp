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

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vip/ctx/contextualizer.hpp"
#include "vip/lm/model.hpp"
#include "vip/tasks/tasks.hpp"
#include "vip/vq/quantizer.hpp"

namespace vip::prompt {

using core::Matrix;
using core::Parameter;
using core::Tape;
using core::Var;

enum class Variant { kFT, kPT, kVIP, kVIPC, kVIPIDP };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);

struct MethodConfig {
  Variant variant = Variant::kVIP;
  int prompt_length = 10;      // static plus contextual rows
  int static_tokens = 0;       // hybrid split, VIP only
  bool noise_resilience = false;
  bool dedicated_codebook = false;
  bool vipc_skip = false;      // VIP-C feeds P + P^c instead of P^c
  int idp_hidden = 0;          // 0 picks the width that matches VIP's count

  int contextual_tokens() const { return prompt_length - static_tokens; }
  void validate() const;
  friend bool operator==(const MethodConfig&, const MethodConfig&) = default;
};

struct ModelConfig {
  MethodConfig method;
  ctx::ContextualizerConfig contextualizer;
  vq::QuantizerConfig quantizer;

  // Fills d from the PLM width and applies the hybrid rule K = 10 * n.
  ModelConfig resolved(int d_model) const;
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// IDP generator hidden width for a resolved config.
int idp_hidden_width(const ModelConfig& resolved);

// Exact count of scalars updated by training (gradient or EMA) per variant.
std::size_t count_trainable_params(const ModelConfig& cfg, const lm::LMConfig& lm_cfg);

struct Streams {
  core::RngStream dropout;
  core::RngStream sampling;
};

struct BuiltInput {
  Var embeddings;          // [T, prompt block, X]
  Var prompt_block;        // rows fed in place of the prompt
  Var contextual;          // P^c of the contextual rows (VIP, VIP-C)
  Matrix quantized;        // P^q (VIP)
  vq::Assignment assignment;
  Var commitment;          // sum_i ||p_i^c - sg(p_i^q)||^2 (VIP)
};

struct LossBreakdown {
  Var total;
  double ce = 0.0;
  double commitment = 0.0;  // batch mean, before beta
  double nr = 0.0;
  std::vector<vq::Assignment> assignments;
  std::vector<Matrix> contextual;
};

class PromptModel {
 public:
  PromptModel(const ModelConfig& cfg, std::shared_ptr<const lm::LanguageModel> plm, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  Variant variant() const { return cfg_.method.variant; }
  const lm::LanguageModel& lm() const { return owned_lm_ ? *owned_lm_ : *plm_; }
  std::shared_ptr<const lm::LanguageModel> frozen_lm() const { return plm_; }

  BuiltInput build_input(Tape& t, std::span<const int> hard, std::span<const int> content, bool train_mode,
                         Streams& streams) const;

  // CE + beta * commitment (VIP) + NR (when enabled), averaged over the batch.
  LossBreakdown total_loss(Tape& t, std::span<const tasks::TextSample* const> batch, bool train_mode,
                           Streams& streams) const;

  struct Prediction {
    std::vector<int> decoded;
    double ce = 0.0;  // teacher-forced, same prompt draw as the decode
  };
  Prediction predict(const tasks::TextSample& s, core::RngStream& sampling, int max_len = 4) const;

  // Input-dependent prompt rows with dropout off: P^c for VIP and VIP-C, the
  // generated prompt for VIP-IDP, the static block otherwise.
  Matrix prompt_representation(std::span<const int> content) const;

  void ema_update(const LossBreakdown& loss);

  vq::Codebook* codebook() { return codebook_ ? &*codebook_ : nullptr; }
  const vq::Codebook* codebook() const { return codebook_ ? &*codebook_ : nullptr; }
  ctx::Contextualizer* contextualizer() { return contextualizer_ ? &*contextualizer_ : nullptr; }
  const ctx::Contextualizer* contextualizer() const { return contextualizer_ ? &*contextualizer_ : nullptr; }
  const Parameter* prompts() const { return prompts_.value.size() ? &prompts_ : nullptr; }

  // Parameters the optimizer updates.
  std::vector<Parameter*> trainable_parameters();
  // Everything a checkpoint must store besides the frozen PLM; includes the
  // codebook and the fine-tuned PLM copy for FT.
  std::vector<Parameter*> state_parameters();
  std::vector<const Parameter*> state_parameters() const;

 private:
  Var idp_prompts(Tape& t, std::span<const int> content) const;

  ModelConfig cfg_;
  std::shared_ptr<const lm::LanguageModel> plm_;
  std::optional<lm::LanguageModel> owned_lm_;
  Parameter prompts_;
  std::optional<ctx::Contextualizer> contextualizer_;
  std::optional<vq::Codebook> codebook_;
  core::nn::Linear idp_hidden_;
  core::nn::Linear idp_out_;
};

}  // namespace vip::prompt
