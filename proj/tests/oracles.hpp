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

// Independent reference computations shared by the unit tests and the
// acceptance runner.

#include <array>
#include <vector>

#include "vip/core/ops.hpp"
#include "vip/prompt/prompt_model.hpp"
#include "vip/vq/quantizer.hpp"

namespace vip::oracle {

inline prompt::Streams fixed_streams(std::uint64_t seed) {
  return {core::RngStream(seed, "dropout"), core::RngStream(seed, "sampling")};
}

// Independent two-pass reference: count hits, then weighted means.
inline void reference_ema(core::Matrix& e, std::vector<double>& c, const std::vector<vq::Assignment>& as,
                   const std::vector<core::Matrix>& pcs, double lambda) {
  const int K = static_cast<int>(c.size());
  std::vector<double> hits(K, 0.0);
  for (const auto& a : as)
    for (const auto& row : a.codes)
      for (int k : row) hits[k] += 1.0;
  for (int k = 0; k < K; ++k) c[k] = lambda * c[k] + (1 - lambda) * hits[k];
  core::Matrix sums = core::Matrix::Zero(K, e.cols());
  for (std::size_t b = 0; b < as.size(); ++b)
    for (std::size_t i = 0; i < as[b].codes.size(); ++i)
      for (int k : as[b].codes[i]) sums.row(k) += pcs[b].row(static_cast<Eigen::Index>(i));
  for (int k = 0; k < K; ++k)
    if (hits[k] > 0) e.row(k) = lambda * e.row(k) + (1 - lambda) * sums.row(k) / c[k];
}

// Smooth stand-in for the VIP loss (no static rows) (CE + beta * commitment + optional NR)
// around the current parameters: the sampled codes are pinned and the prompt
// block is P + P^c + (P^q - P^c) with the bracket frozen at the base point.
// Its value there equals the real loss and its derivative is the intended
// straight-through gradient. Dropout masks replay from the same stream.
class VipSurrogate {
 public:
  VipSurrogate(const prompt::PromptModel& model, std::vector<const tasks::TextSample*> batch, std::uint64_t seed)
      : model_(model), batch_(std::move(batch)), seed_(seed) {
    core::Tape t;
    auto s = fixed_streams(seed_);
    const auto loss = model_.total_loss(t, batch_, true, s);
    base_value_ = loss.total.scalar();
    const auto& cb = *model_.codebook();
    for (std::size_t b = 0; b < batch_.size(); ++b) {
      const auto& codes = loss.assignments[b].codes;
      core::Matrix pq = core::Matrix::Zero(static_cast<Eigen::Index>(codes.size()), cb.dim());
      for (std::size_t i = 0; i < codes.size(); ++i) {
        for (int k : codes[i]) pq.row(static_cast<Eigen::Index>(i)) += cb.embeddings().row(k);
        pq.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(codes[i].size());
      }
      offsets_.push_back(pq - loss.contextual[b]);
      quantized_.push_back(std::move(pq));
    }
  }

  double base_value() const { return base_value_; }

  core::Var analytic(core::Tape& t) const {
    auto s = fixed_streams(seed_);
    return model_.total_loss(t, batch_, true, s).total;
  }

  core::Var operator()(core::Tape& t) const {
    namespace ops = core::ops;
    const auto& plm = model_.lm();
    const auto& cfg = model_.config();
    const bool nr = cfg.method.noise_resilience;
    auto s = fixed_streams(seed_);
    std::vector<core::Var> ces, commits, first, second;
    for (std::size_t b = 0; b < batch_.size(); ++b) {
      const tasks::TextSample& x = *batch_[b];
      core::Var p = t.param(*model_.prompts());
      core::Var emb = plm.embed_tokens(t, x.content());
      core::Var pc = model_.contextualizer()->contextualize(t, p, emb, true, &s.dropout);
      core::Var block = ops::add(ops::add(p, pc), t.constant(offsets_[b]));
      const std::array<core::Var, 3> parts{plm.embed_tokens(t, x.hard()), block, emb};
      ces.push_back(plm.teacher_forced_loss(t, ops::concat_rows(parts), x.target));
      commits.push_back(vq::commitment_loss(pc, quantized_[b], 1.0));
      if (nr) {
        first.push_back(pc);
        second.push_back(model_.contextualizer()->contextualize(t, p, plm.embed_tokens(t, x.content()), true,
                                                                     &s.dropout));
      }
    }
    const double inv = 1.0 / static_cast<double>(batch_.size());
    core::Var total = ops::scale(ops::sum(ops::concat_rows(ces)), inv);
    total = ops::add(total, ops::scale(ops::sum(ops::concat_rows(commits)), inv * cfg.quantizer.commitment_cost));
    if (nr) total = ops::add(total, ctx::nr_loss(first, second));
    return total;
  }

 private:
  const prompt::PromptModel& model_;
  std::vector<const tasks::TextSample*> batch_;
  std::uint64_t seed_;
  double base_value_ = 0.0;
  std::vector<core::Matrix> offsets_, quantized_;
};

}  // namespace vip::oracle
