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

#include <cstdint>
#include <span>
#include <vector>

#include "vip/core/nn.hpp"
#include "vip/lm/vocab.hpp"

namespace vip::lm {

using core::Matrix;
using core::Parameter;
using core::Tape;
using core::Var;

struct LMConfig {
  int d_model = 64;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int ffn_dim = 128;
  int vocab_size = 80;
  int max_seq_len = 64;

  void validate() const;
  friend bool operator==(const LMConfig&, const LMConfig&) = default;
};

// Encoder-decoder transformer over embedding sequences. All weights live in
// the plm group. After freeze() every weight is non-trainable, so graphs
// built on it route gradient only to the inputs.
// Scalar count of a LanguageModel built from cfg.
std::size_t param_count(const LMConfig& cfg);

class LanguageModel {
 public:
  LanguageModel(const LMConfig& cfg, core::RngStream& init);

  const LMConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

  // Rows of the input embedding table. Out-of-range ids throw.
  Var embed_tokens(Tape& t, std::span<const int> ids) const;
  // Position embeddings, encoder stack, final norm. Input: L x d_model.
  Var encode(Tape& t, Var input_embeddings) const;
  // Decoder over `decoder_input` ids attending to `memory`; T x vocab logits.
  Var decoder_logits(Tape& t, Var memory, std::span<const int> decoder_input) const;
  // Teacher-forced mean token cross-entropy of `targets` (which end in </s>).
  Var teacher_forced_loss(Tape& t, Var input_embeddings, std::span<const int> targets) const;
  Var memory_loss(Tape& t, Var memory, std::span<const int> targets) const;

  // Greedy decoding; stops after </s> (included in the result) or max_len.
  std::vector<int> decode(const Matrix& input_embeddings, int max_len) const;
  std::vector<int> decode_memory(Tape& t, Var memory, int max_len) const;
  std::vector<int> decode_ids(std::span<const int> input_ids, int max_len) const;

  void freeze();
  bool frozen() const { return frozen_; }
  // Independent copy with every weight trainable again.
  LanguageModel thawed_copy() const;
  std::uint64_t checksum() const;
  std::size_t param_count() const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  LMConfig cfg_;
  Vocab vocab_;
  Parameter token_embedding_;
  Parameter encoder_positions_;
  Parameter decoder_positions_;
  std::vector<core::nn::EncoderBlock> encoder_;
  core::nn::LayerNorm encoder_norm_;
  std::vector<core::nn::DecoderBlock> decoder_;
  core::nn::LayerNorm decoder_norm_;
  core::nn::Linear output_;
  bool frozen_ = false;
};

// Mean token-level cross-entropy over non-pad target positions.
Var seq_ce_loss(Var logits, std::span<const int> targets);

// Decoded sequence equals the target position-wise up to and including the
// first </s> (anything after it is ignored on both sides).
bool exact_match(std::span<const int> decoded, std::span<const int> target);

}  // namespace vip::lm
