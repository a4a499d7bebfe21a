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

#include "vip/lm/pretrain.hpp"

#include <algorithm>

#include "vip/core/error.hpp"
#include "vip/core/optim.hpp"

namespace vip::lm {

Corpus::Corpus(const Vocab& vocab, CorpusConfig cfg) : cfg_(cfg) {
  require(cfg_.min_len >= 2 && cfg_.max_len >= cfg_.min_len, ErrorCode::kConfig,
          "corpus: need 2 <= min_len <= max_len");
  require(cfg_.max_spans >= 1 && cfg_.max_spans <= ids::kNumSentinels && cfg_.max_span_len >= 1,
          ErrorCode::kConfig, "corpus: bad span settings");
  for (int k = 0; k < vocab.num_content(); ++k) alphabet_.push_back(vocab.content_id(k));
  for (int l = 0; l < ids::kNumLabels; ++l) alphabet_.push_back(ids::kLabelBase + l);
}

int Corpus::symbol(core::RngStream& rng) const { return alphabet_[rng.uniform_index(alphabet_.size())]; }

TextPair Corpus::sample(core::RngStream& rng) const {
  return sample(rng.uniform() < cfg_.copy_fraction ? CorpusTask::kCopy : CorpusTask::kInfill, rng);
}

TextPair Corpus::sample(CorpusTask task, core::RngStream& rng) const {
  const int len = cfg_.min_len + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(cfg_.max_len - cfg_.min_len + 1)));
  std::vector<int> seq(static_cast<std::size_t>(len));
  for (int& s : seq) s = symbol(rng);
  TextPair out;
  if (task == CorpusTask::kCopy) {
    out.input.push_back(ids::kCopyTask);
    out.input.insert(out.input.end(), seq.begin(), seq.end());
    out.target = seq;
    out.target.push_back(ids::kEos);
    return out;
  }
  // The text is seq repeated twice and spans are cut only from the second
  // copy, so every masked symbol is recoverable from the input.
  const int want = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(cfg_.max_spans)));
  std::vector<std::pair<int, int>> spans;  // (start, length) within the copy
  int pos = 0;
  for (int s = 0; s < want && pos < len; ++s) {
    const int remaining = len - pos;
    const int span_len = 1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(std::min(cfg_.max_span_len, remaining))));
    const int slack = remaining - span_len;
    const int start = pos + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(slack + 1)));
    spans.emplace_back(start, span_len);
    pos = start + span_len + 1;
  }
  out.input.push_back(ids::kInfillTask);
  out.input.insert(out.input.end(), seq.begin(), seq.end());
  int next = 0;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const auto [start, span_len] = spans[s];
    out.input.insert(out.input.end(), seq.begin() + next, seq.begin() + start);
    const int sentinel = ids::kSentinelBase + static_cast<int>(s);
    out.input.push_back(sentinel);
    out.target.push_back(sentinel);
    out.target.insert(out.target.end(), seq.begin() + start, seq.begin() + start + span_len);
    next = start + span_len;
  }
  out.input.insert(out.input.end(), seq.begin() + next, seq.end());
  out.target.push_back(ids::kEos);
  return out;
}

double corpus_exact_match(const LanguageModel& model, const Corpus& corpus, CorpusTask task,
                          int samples, core::RngStream rng) {
  require(samples > 0, ErrorCode::kRuntime, "corpus_exact_match: samples must be positive");
  int hits = 0;
  for (int i = 0; i < samples; ++i) {
    TextPair p = corpus.sample(task, rng);
    auto out = model.decode_ids(p.input, static_cast<int>(p.target.size()) + 1);
    if (exact_match(out, p.target)) ++hits;
  }
  return static_cast<double>(hits) / samples;
}

LanguageModel pretrain(const LMConfig& lm_cfg, const PretrainConfig& cfg, std::uint64_t seed,
                       PretrainReport* report, const std::function<void(int, double)>& on_step) {
  require(cfg.steps > 0 && cfg.batch_size > 0 && cfg.eval_interval > 0, ErrorCode::kConfig,
          "pretrain: steps, batch_size and eval_interval must be positive");
  require(cfg.warmup_steps >= 0 && cfg.final_lr_fraction >= 0.0 && cfg.final_lr_fraction <= 1.0 &&
              cfg.learning_rate > 0.0,
          ErrorCode::kConfig, "pretrain: invalid learning-rate schedule");
  core::RngStream init(seed, "init/plm");
  core::RngStream data(seed, "data/pretrain");
  const core::RngStream heldout(seed, "data/pretrain-heldout");
  LanguageModel model(lm_cfg, init);
  Corpus corpus(model.vocab(), cfg.corpus);
  core::Optimizer opt(core::OptimizerKind::kAdam, {cfg.learning_rate, cfg.learning_rate}, model.parameters());

  PretrainReport local;
  PretrainReport& rep = report ? *report : local;
  rep = PretrainReport{};
  bool reached = false;
  for (int step = 1; step <= cfg.steps; ++step) {
    opt.zero_grad();
    Tape tape;
    std::vector<Var> losses;
    for (int b = 0; b < cfg.batch_size; ++b) {
      TextPair p = corpus.sample(data);
      losses.push_back(model.teacher_forced_loss(tape, model.embed_tokens(tape, p.input), p.target));
    }
    Var loss = core::ops::scale(core::ops::sum(core::ops::concat_rows(losses)), 1.0 / cfg.batch_size);
    tape.backward(loss);
    const double warm = std::min(1.0, static_cast<double>(step) / std::max(1, cfg.warmup_steps));
    const double frac = static_cast<double>(step) / cfg.steps;
    const double lr = cfg.learning_rate * warm * (1.0 - (1.0 - cfg.final_lr_fraction) * frac);
    opt.set_rates({lr, lr});
    if (cfg.clip_norm > 0.0) core::clip_grad_norm(opt.parameters(), cfg.clip_norm);
    opt.step();
    rep.loss_history.push_back(loss.scalar());
    rep.steps_run = step;
    if (on_step) on_step(step, loss.scalar());
    if (step % cfg.eval_interval == 0 || step == cfg.steps) {
      rep.copy_exact_match = corpus_exact_match(model, corpus, CorpusTask::kCopy, cfg.eval_samples, heldout.fork("copy"));
      rep.infill_exact_match = corpus_exact_match(model, corpus, CorpusTask::kInfill, cfg.eval_samples, heldout.fork("infill"));
      if (rep.copy_exact_match >= cfg.target_exact_match && rep.infill_exact_match >= cfg.target_exact_match) {
        reached = true;
        break;
      }
    }
  }
  if (!reached) {
    fail(ErrorCode::kRuntime,
         "pretrain: held-out exact match (copy " + std::to_string(rep.copy_exact_match) + ", infill " +
             std::to_string(rep.infill_exact_match) + ") below " + std::to_string(cfg.target_exact_match) +
             " after " + std::to_string(rep.steps_run) + " steps; raise pretrain steps or shrink the corpus lengths");
  }
  model.freeze();
  return model;
}

}  // namespace vip::lm
