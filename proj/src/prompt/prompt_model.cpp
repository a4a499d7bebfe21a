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

#include "vip/prompt/prompt_model.hpp"

#include <array>
#include <cmath>

#include "vip/core/error.hpp"

namespace vip::prompt {

namespace ops = core::ops;
using core::Group;

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 5> kVariants{{
    {Variant::kFT, "FT"},
    {Variant::kPT, "PT"},
    {Variant::kVIP, "VIP"},
    {Variant::kVIPC, "VIP-C"},
    {Variant::kVIPIDP, "VIP-IDP"},
}};

bool uses_contextualizer(Variant v) { return v == Variant::kVIP || v == Variant::kVIPC; }

}  // namespace

std::string_view variant_name(Variant v) {
  for (const auto& [k, name] : kVariants)
    if (k == v) return name;
  return "?";
}

Variant parse_variant(std::string_view s) {
  for (const auto& [k, name] : kVariants)
    if (name == s) return k;
  fail(ErrorCode::kConfig, "unknown method variant '" + std::string(s) + "' (expected FT, PT, VIP, VIP-C or VIP-IDP)");
}

void MethodConfig::validate() const {
  const std::string v(variant_name(variant));
  if (variant != Variant::kFT) require(prompt_length >= 1, ErrorCode::kConfig, v + ": prompt_length must be >= 1");
  require(static_tokens >= 0, ErrorCode::kConfig, "static_tokens must be >= 0");
  require(static_tokens == 0 || variant == Variant::kVIP, ErrorCode::kConfig,
          v + ": a static/contextual split is only defined for VIP");
  require(static_tokens < prompt_length || variant != Variant::kVIP, ErrorCode::kConfig,
          "VIP: static_tokens must leave at least one contextual token");
  require(!noise_resilience || uses_contextualizer(variant), ErrorCode::kConfig,
          v + ": noise resilience needs a sentence encoder (VIP or VIP-C)");
  require(!dedicated_codebook || variant == Variant::kVIP, ErrorCode::kConfig,
          v + ": dedicated codebook needs the quantizer (VIP only)");
  require(!vipc_skip || variant == Variant::kVIPC, ErrorCode::kConfig, v + ": vipc_skip applies to VIP-C only");
  require(idp_hidden >= 0, ErrorCode::kConfig, "idp_hidden must be >= 0");
  require(idp_hidden == 0 || variant == Variant::kVIPIDP, ErrorCode::kConfig, v + ": idp_hidden applies to VIP-IDP only");
}

ModelConfig ModelConfig::resolved(int d_model) const {
  ModelConfig out = *this;
  out.contextualizer.d = d_model;
  if (out.method.noise_resilience) out.contextualizer.use_dropout = true;
  if (out.method.variant == Variant::kVIP && out.method.static_tokens > 0)
    out.quantizer.codebook_size = 10 * out.method.contextual_tokens();
  if (out.method.dedicated_codebook) out.quantizer.mode = vq::CodebookMode::kDedicated;
  out.quantizer.temperature = out.quantizer.resolve_temperature(d_model);
  return out;
}

void ModelConfig::validate() const {
  method.validate();
  if (uses_contextualizer(method.variant)) contextualizer.validate();
  if (method.variant == Variant::kVIP) {
    quantizer.validate();
    if (quantizer.mode == vq::CodebookMode::kDedicated)
      require(quantizer.codebook_size % method.contextual_tokens() == 0, ErrorCode::kConfig,
              "VIP: dedicated codebook needs K=" + std::to_string(quantizer.codebook_size) +
                  " divisible by the contextual prompt length " + std::to_string(method.contextual_tokens()));
  }
}

int idp_hidden_width(const ModelConfig& r) {
  if (r.method.idp_hidden > 0) return r.method.idp_hidden;
  const double d = r.contextualizer.d;
  const double nd = static_cast<double>(r.method.prompt_length) * d;
  const double vip = static_cast<double>(ctx::param_count(r.contextualizer)) + r.quantizer.codebook_size * d;
  return std::max(1, static_cast<int>(std::lround(vip / (d + 1.0 + nd))));
}

std::size_t count_trainable_params(const ModelConfig& cfg, const lm::LMConfig& lm_cfg) {
  const ModelConfig r = cfg.resolved(lm_cfg.d_model);
  r.validate();
  const std::size_t d = static_cast<std::size_t>(lm_cfg.d_model);
  const std::size_t nd = static_cast<std::size_t>(r.method.prompt_length) * d;
  switch (r.method.variant) {
    case Variant::kFT: return lm::param_count(lm_cfg);
    case Variant::kPT: return nd;
    case Variant::kVIP: return nd + ctx::param_count(r.contextualizer) + static_cast<std::size_t>(r.quantizer.codebook_size) * d;
    case Variant::kVIPC: return nd + ctx::param_count(r.contextualizer);
    case Variant::kVIPIDP: {
      const std::size_t h = static_cast<std::size_t>(idp_hidden_width(r));
      return d * h + h + h * nd + nd;
    }
  }
  return 0;
}

PromptModel::PromptModel(const ModelConfig& cfg, std::shared_ptr<const lm::LanguageModel> plm, std::uint64_t seed)
    : plm_(std::move(plm)) {
  require(plm_ != nullptr, ErrorCode::kRuntime, "prompt model: no PLM");
  require(plm_->frozen(), ErrorCode::kRuntime, "prompt model: the PLM must be frozen");
  const int d = plm_->config().d_model;
  cfg_ = cfg.resolved(d);
  cfg_.validate();
  const Variant v = cfg_.method.variant;
  if (v == Variant::kFT) {
    owned_lm_.emplace(plm_->thawed_copy());
    return;
  }
  if (v != Variant::kVIPIDP) {
    core::RngStream init(seed, "init/prompt");
    const auto& vocab = plm_->vocab();
    std::vector<int> ids(static_cast<std::size_t>(cfg_.method.prompt_length));
    for (int& id : ids) id = vocab.content_id(static_cast<int>(init.uniform_index(vocab.num_content())));
    Tape t(false);
    prompts_.name = "prompt";
    prompts_.group = Group::kPrompt;
    prompts_.value = plm_->embed_tokens(t, ids).value();
  }
  if (uses_contextualizer(v)) {
    core::RngStream init(seed, "init/contextualizer");
    contextualizer_.emplace(cfg_.contextualizer, init);
  }
  if (v == Variant::kVIP) {
    core::RngStream init(seed, "init/codebook");
    const auto& q = cfg_.quantizer;
    codebook_.emplace(q.codebook_size, d, *q.temperature, q.decay, q.mode, cfg_.method.contextual_tokens(), init);
  }
  if (v == Variant::kVIPIDP) {
    core::RngStream init(seed, "init/idp");
    const int h = idp_hidden_width(cfg_);
    idp_hidden_ = core::nn::Linear("idp.hidden", d, h, Group::kEncoder, init);
    idp_out_ = core::nn::Linear("idp.out", h, cfg_.method.prompt_length * d, Group::kEncoder, init);
  }
}

Var PromptModel::idp_prompts(Tape& t, std::span<const int> content) const {
  Var pooled = ops::mean_rows(plm_->encode(t, plm_->embed_tokens(t, content)));
  Var h = ops::relu(idp_hidden_(t, pooled));
  Var out = ops::tanh(idp_out_(t, h));
  return ops::reshape(out, cfg_.method.prompt_length, plm_->config().d_model);
}

BuiltInput PromptModel::build_input(Tape& t, std::span<const int> hard, std::span<const int> content,
                                    bool train_mode, Streams& streams) const {
  require(!content.empty(), ErrorCode::kRuntime, "build_input: empty input X");
  const auto& model = lm();
  BuiltInput in;
  Var x = model.embed_tokens(t, content);
  std::vector<Var> parts;
  if (!hard.empty()) parts.push_back(model.embed_tokens(t, hard));
  core::RngStream* drop = train_mode ? &streams.dropout : nullptr;
  switch (cfg_.method.variant) {
    case Variant::kFT: break;
    case Variant::kPT: in.prompt_block = t.param(prompts_); break;
    case Variant::kVIP: {
      Var p = t.param(prompts_);
      const int u = cfg_.method.static_tokens;
      const int n = cfg_.method.contextual_tokens();
      Var p_ctx = u > 0 ? ops::slice_rows(p, u, n) : p;
      in.contextual = contextualizer_->contextualize(t, p_ctx, x, train_mode, drop);
      auto [pq, assignment] = codebook_->quantize(in.contextual.value(), cfg_.quantizer.samples, streams.sampling);
      Var rows = ops::add(p_ctx, ops::straight_through(pq, in.contextual));
      if (u > 0) {
        const std::array<Var, 2> blocks{ops::slice_rows(p, 0, u), rows};
        rows = ops::concat_rows(blocks);
      }
      in.prompt_block = rows;
      in.commitment = vq::commitment_loss(in.contextual, pq, 1.0);
      in.quantized = std::move(pq);
      in.assignment = std::move(assignment);
      break;
    }
    case Variant::kVIPC: {
      Var p = t.param(prompts_);
      in.contextual = contextualizer_->contextualize(t, p, x, train_mode, drop);
      in.prompt_block = cfg_.method.vipc_skip ? ops::add(p, in.contextual) : in.contextual;
      break;
    }
    case Variant::kVIPIDP: in.prompt_block = idp_prompts(t, content); break;
  }
  if (in.prompt_block.valid()) parts.push_back(in.prompt_block);
  parts.push_back(x);
  in.embeddings = ops::concat_rows(parts);
  return in;
}

LossBreakdown PromptModel::total_loss(Tape& t, std::span<const tasks::TextSample* const> batch, bool train_mode,
                                      Streams& streams) const {
  require(!batch.empty(), ErrorCode::kRuntime, "total_loss: empty batch");
  const bool vip = cfg_.method.variant == Variant::kVIP;
  const bool nr = cfg_.method.noise_resilience && train_mode;
  const double inv = 1.0 / static_cast<double>(batch.size());
  LossBreakdown out;
  std::vector<Var> ces, commits, first, second;
  for (const tasks::TextSample* s : batch) {
    BuiltInput in = build_input(t, s->hard(), s->content(), train_mode, streams);
    ces.push_back(lm().teacher_forced_loss(t, in.embeddings, s->target));
    if (vip) {
      commits.push_back(in.commitment);
      out.assignments.push_back(std::move(in.assignment));
      out.contextual.push_back(in.contextual.value());
    }
    if (nr) {
      first.push_back(in.contextual);
      Var p = t.param(prompts_);
      const int u = cfg_.method.static_tokens;
      Var p_ctx = u > 0 ? ops::slice_rows(p, u, cfg_.method.contextual_tokens()) : p;
      second.push_back(contextualizer_->contextualize(t, p_ctx, lm().embed_tokens(t, s->content()), true,
                                                      &streams.dropout));
    }
  }
  Var ce = ops::scale(ops::sum(ops::concat_rows(ces)), inv);
  out.ce = ce.scalar();
  out.total = ce;
  if (vip) {
    Var commit = ops::scale(ops::sum(ops::concat_rows(commits)), inv);
    out.commitment = commit.scalar();
    out.total = ops::add(out.total, ops::scale(commit, cfg_.quantizer.commitment_cost));
  }
  if (nr) {
    Var l = ctx::nr_loss(first, second);
    out.nr = l.scalar();
    out.total = ops::add(out.total, l);
  }
  return out;
}

PromptModel::Prediction PromptModel::predict(const tasks::TextSample& s, core::RngStream& sampling,
                                             int max_len) const {
  Tape t(false);
  Streams streams{core::RngStream(0, "unused"), sampling};
  BuiltInput in = build_input(t, s.hard(), s.content(), false, streams);
  sampling = streams.sampling;
  Var memory = lm().encode(t, in.embeddings);
  Prediction out;
  out.ce = lm().memory_loss(t, memory, s.target).scalar();
  out.decoded = lm().decode_memory(t, memory, max_len);
  return out;
}

Matrix PromptModel::prompt_representation(std::span<const int> content) const {
  require(cfg_.method.variant != Variant::kFT, ErrorCode::kRuntime, "FT has no prompt rows");
  Tape t(false);
  switch (cfg_.method.variant) {
    case Variant::kVIP:
    case Variant::kVIPC: {
      Var p = t.param(prompts_);
      const int u = cfg_.method.static_tokens;
      Var p_ctx = u > 0 ? ops::slice_rows(p, u, cfg_.method.contextual_tokens()) : p;
      return contextualizer_->contextualize(t, p_ctx, plm_->embed_tokens(t, content), false, nullptr).value();
    }
    case Variant::kVIPIDP: return idp_prompts(t, content).value();
    default: return prompts_.value;
  }
}

void PromptModel::ema_update(const LossBreakdown& loss) {
  if (!codebook_) return;
  codebook_->ema_update(loss.assignments, loss.contextual, cfg_.quantizer.shrink_unused);
}

std::vector<Parameter*> PromptModel::trainable_parameters() {
  std::vector<Parameter*> out;
  if (owned_lm_) return owned_lm_->parameters();
  if (prompts_.value.size()) out.push_back(&prompts_);
  if (contextualizer_)
    for (Parameter* p : contextualizer_->parameters()) out.push_back(p);
  if (cfg_.method.variant == Variant::kVIPIDP) {
    idp_hidden_.collect(out);
    idp_out_.collect(out);
  }
  return out;
}

std::vector<Parameter*> PromptModel::state_parameters() {
  auto out = trainable_parameters();
  if (codebook_) out.push_back(&codebook_->parameter());
  return out;
}

std::vector<const Parameter*> PromptModel::state_parameters() const {
  auto ps = const_cast<PromptModel*>(this)->state_parameters();
  return {ps.begin(), ps.end()};
}

}  // namespace vip::prompt
