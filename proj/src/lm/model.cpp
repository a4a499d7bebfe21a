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

#include "vip/lm/model.hpp"

#include <algorithm>

#include "vip/core/error.hpp"

namespace vip::lm {

namespace ops = core::ops;
using core::Group;

void LMConfig::validate() const {
  require(d_model > 0 && encoder_layers > 0 && decoder_layers > 0 && heads > 0 && ffn_dim > 0 &&
              vocab_size > 0 && max_seq_len > 0,
          ErrorCode::kConfig, "lm config: all sizes must be positive");
  require(d_model % heads == 0, ErrorCode::kConfig, "lm config: d_model must be divisible by heads");
}

namespace {

Matrix normal(int rows, int cols, double stddev, core::RngStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
  return m;
}

}  // namespace

LanguageModel::LanguageModel(const LMConfig& cfg, core::RngStream& init) : cfg_(cfg), vocab_(cfg.vocab_size) {
  cfg_.validate();
  const int d = cfg_.d_model;
  token_embedding_ = Parameter("plm.embed", normal(cfg_.vocab_size, d, 1.0, init), Group::kPlm);
  encoder_positions_ = Parameter("plm.enc_pos", normal(cfg_.max_seq_len, d, 0.1, init), Group::kPlm);
  decoder_positions_ = Parameter("plm.dec_pos", normal(cfg_.max_seq_len, d, 0.1, init), Group::kPlm);
  for (int l = 0; l < cfg_.encoder_layers; ++l)
    encoder_.emplace_back("plm.enc" + std::to_string(l), d, cfg_.ffn_dim, Group::kPlm, init);
  encoder_norm_ = core::nn::LayerNorm("plm.enc_norm", d, Group::kPlm);
  for (int l = 0; l < cfg_.decoder_layers; ++l)
    decoder_.emplace_back("plm.dec" + std::to_string(l), d, cfg_.ffn_dim, Group::kPlm, init);
  decoder_norm_ = core::nn::LayerNorm("plm.dec_norm", d, Group::kPlm);
  output_ = core::nn::Linear("plm.out", d, cfg_.vocab_size, Group::kPlm, init);
}

Var LanguageModel::embed_tokens(Tape& t, std::span<const int> ids) const {
  for (int i : ids) {
    require(i >= 0 && i < cfg_.vocab_size, ErrorCode::kRuntime,
            "embed_tokens: id " + std::to_string(i) + " outside vocabulary of " +
                std::to_string(cfg_.vocab_size));
  }
  return ops::gather_rows(t.param(token_embedding_), ids);
}

Var LanguageModel::encode(Tape& t, Var x) const {
  const auto L = x.rows();
  require(x.cols() == cfg_.d_model, ErrorCode::kRuntime,
          "encode: embedding width " + std::to_string(x.cols()) + " != d_model " +
              std::to_string(cfg_.d_model));
  require(L >= 1 && L <= cfg_.max_seq_len, ErrorCode::kRuntime,
          "encode: sequence length " + std::to_string(L) + " outside [1, " +
              std::to_string(cfg_.max_seq_len) + "]");
  Var h = ops::add(x, ops::slice_rows(t.param(encoder_positions_), 0, L));
  for (const auto& block : encoder_) h = core::nn::transformer_encoder_block(t, h, block, cfg_.heads, 0.0, false, nullptr);
  return encoder_norm_(t, h);
}

Var LanguageModel::decoder_logits(Tape& t, Var memory, std::span<const int> decoder_input) const {
  const auto T = static_cast<Eigen::Index>(decoder_input.size());
  require(T >= 1 && T <= cfg_.max_seq_len, ErrorCode::kRuntime, "decoder: bad target length");
  Var y = ops::add(embed_tokens(t, decoder_input), ops::slice_rows(t.param(decoder_positions_), 0, T));
  for (const auto& block : decoder_) y = core::nn::transformer_decoder_block(t, y, memory, block, cfg_.heads);
  return output_(t, decoder_norm_(t, y));
}

Var LanguageModel::teacher_forced_loss(Tape& t, Var input_embeddings, std::span<const int> targets) const {
  return memory_loss(t, encode(t, input_embeddings), targets);
}

Var LanguageModel::memory_loss(Tape& t, Var memory, std::span<const int> targets) const {
  require(!targets.empty(), ErrorCode::kRuntime, "teacher_forced_loss: empty target");
  std::vector<int> dec_in;
  dec_in.reserve(targets.size());
  dec_in.push_back(ids::kBos);
  dec_in.insert(dec_in.end(), targets.begin(), targets.end() - 1);
  return seq_ce_loss(decoder_logits(t, memory, dec_in), targets);
}

std::vector<int> LanguageModel::decode(const Matrix& input_embeddings, int max_len) const {
  Tape t(false);
  return decode_memory(t, encode(t, t.constant(input_embeddings)), max_len);
}

std::vector<int> LanguageModel::decode_memory(Tape& t, Var memory, int max_len) const {
  require(max_len > 0, ErrorCode::kRuntime, "decode: max_len must be positive");
  std::vector<int> dec_in{ids::kBos};
  std::vector<int> out;
  for (int step = 0; step < max_len; ++step) {
    Var logits = decoder_logits(t, memory, dec_in);
    const Matrix& lv = logits.value();
    Eigen::Index best = 0;
    lv.row(lv.rows() - 1).maxCoeff(&best);
    const int tok = static_cast<int>(best);
    out.push_back(tok);
    if (tok == ids::kEos) break;
    dec_in.push_back(tok);
  }
  return out;
}

std::vector<int> LanguageModel::decode_ids(std::span<const int> input_ids, int max_len) const {
  Tape t(false);
  Matrix emb = embed_tokens(t, input_ids).value();
  return decode(emb, max_len);
}

void LanguageModel::freeze() {
  for (Parameter* p : parameters()) p->trainable = false;
  frozen_ = true;
}

LanguageModel LanguageModel::thawed_copy() const {
  LanguageModel out = *this;
  for (Parameter* p : out.parameters()) p->trainable = true;
  out.frozen_ = false;
  return out;
}

std::size_t param_count(const LMConfig& cfg) {
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t h = static_cast<std::size_t>(cfg.ffn_dim);
  const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
  const std::size_t l = static_cast<std::size_t>(cfg.max_seq_len);
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t ffn = d * h + h + h * d + d;
  const std::size_t enc = core::nn::encoder_block_param_count(cfg.d_model, cfg.ffn_dim);
  const std::size_t dec = 3 * 2 * d + 2 * attn + ffn;
  return v * d + 2 * l * d + static_cast<std::size_t>(cfg.encoder_layers) * enc + 2 * d +
         static_cast<std::size_t>(cfg.decoder_layers) * dec + 2 * d + d * v + v;
}

std::uint64_t LanguageModel::checksum() const { return core::checksum(parameters()); }

std::size_t LanguageModel::param_count() const { return core::count_scalars(parameters()); }

std::vector<Parameter*> LanguageModel::parameters() {
  std::vector<Parameter*> out{&token_embedding_, &encoder_positions_, &decoder_positions_};
  for (auto& b : encoder_) b.collect(out);
  encoder_norm_.collect(out);
  for (auto& b : decoder_) b.collect(out);
  decoder_norm_.collect(out);
  output_.collect(out);
  return out;
}

std::vector<const Parameter*> LanguageModel::parameters() const {
  auto ps = const_cast<LanguageModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

Var seq_ce_loss(Var logits, std::span<const int> targets) {
  return ops::cross_entropy(logits, targets, ids::kPad);
}

bool exact_match(std::span<const int> decoded, std::span<const int> target) {
  auto trim = [](std::span<const int> s) {
    auto it = std::find(s.begin(), s.end(), ids::kEos);
    return s.first(static_cast<std::size_t>(it == s.end() ? s.size() : (it - s.begin()) + 1));
  };
  auto a = trim(decoded);
  auto b = trim(target);
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace vip::lm
