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

#include <functional>
#include <memory>
#include <vector>

#include "vip/core/rng.hpp"
#include "vip/lm/model.hpp"

namespace vip::lm {

struct TextPair {
  std::vector<int> input;
  std::vector<int> target;  // ends in </s>
};

enum class CorpusTask { kCopy, kInfill };

// Copy / span-infilling mixture over content symbols and label tokens. The
// descriptors <copy> and <infill> never appear in downstream tasks.
struct CorpusConfig {
  int min_len = 2;
  int max_len = 8;
  int max_spans = 2;
  int max_span_len = 2;
  double copy_fraction = 0.5;
  friend bool operator==(const CorpusConfig&, const CorpusConfig&) = default;
};

class Corpus {
 public:
  Corpus(const Vocab& vocab, CorpusConfig cfg);

  TextPair sample(core::RngStream& rng) const;
  TextPair sample(CorpusTask task, core::RngStream& rng) const;
  const CorpusConfig& config() const { return cfg_; }

 private:
  int symbol(core::RngStream& rng) const;

  CorpusConfig cfg_;
  std::vector<int> alphabet_;
};

struct PretrainConfig {
  int steps = 6000;
  int batch_size = 16;
  double learning_rate = 2e-3;  // peak; linear warmup then linear decay
  int warmup_steps = 200;
  double final_lr_fraction = 0.05;
  double clip_norm = 1.0;
  int eval_interval = 250;
  int eval_samples = 200;
  double target_exact_match = 0.95;
  CorpusConfig corpus;
  friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

struct PretrainReport {
  int steps_run = 0;
  double copy_exact_match = 0.0;
  double infill_exact_match = 0.0;
  std::vector<double> loss_history;  // per step
};

// Exact-match rate on held-out corpus samples of one task.
double corpus_exact_match(const LanguageModel& model, const Corpus& corpus, CorpusTask task,
                          int samples, core::RngStream rng);

// Trains with Adam until both held-out exact-match rates reach the target
// (checked every eval_interval steps) and returns the frozen model. Throws if
// the bar is not met within the step budget.
LanguageModel pretrain(const LMConfig& lm_cfg, const PretrainConfig& cfg, std::uint64_t seed,
                       PretrainReport* report = nullptr,
                       const std::function<void(int, double)>& on_step = nullptr);

}  // namespace vip::lm
