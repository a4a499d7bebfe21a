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

#include <optional>
#include <span>
#include <vector>

#include "vip/core/ops.hpp"
#include "vip/core/rng.hpp"
#include "vip/core/tape.hpp"

namespace vip::vq {

using core::Matrix;
using core::RowVector;

enum class CodebookMode { kShared, kDedicated };

struct QuantizerConfig {
  int codebook_size = 100;           // K
  int samples = 10;                  // m
  std::optional<double> temperature;  // tau; unset means resolve_temperature(d)
  double commitment_cost = 0.1;      // beta
  double decay = 0.99;               // lambda
  CodebookMode mode = CodebookMode::kShared;
  // Apply the decay-and-renormalize update to codes with no hits as well.
  bool shrink_unused = false;

  void validate() const;
  double resolve_temperature(int d) const;
  friend bool operator==(const QuantizerConfig&, const QuantizerConfig&) = default;
};

// Per prompt token, the m sampled code indices.
struct Assignment {
  std::vector<std::vector<int>> codes;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct UsageStats {
  std::vector<double> frequency;
  double perplexity = 0.0;
};

class Codebook {
 public:
  // Entries drawn i.i.d. standard normal, counts at 1. Dedicated mode needs
  // K divisible by `partitions` (the number of prompt tokens).
  Codebook(int codebook_size, int d, double temperature, double decay, CodebookMode mode, int partitions,
           core::RngStream& init);

  int size() const { return static_cast<int>(embeddings_.value.rows()); }
  int dim() const { return static_cast<int>(embeddings_.value.cols()); }
  double temperature() const { return temperature_; }
  void set_temperature(double tau);
  double decay() const { return decay_; }
  CodebookMode mode() const { return mode_; }
  int partitions() const { return partitions_; }
  // Code range [begin, end) token t may sample from.
  std::pair<int, int> partition(int token) const;

  const Matrix& embeddings() const { return embeddings_.value; }
  const core::Parameter& parameter() const { return embeddings_; }
  core::Parameter& parameter() { return embeddings_; }
  const std::vector<double>& counts() const { return counts_; }
  void set_state(Matrix embeddings, std::vector<double> counts);

  // -||p - e_k||^2 / tau; codes outside the token's partition get -infinity.
  std::vector<double> logits(const RowVector& p, int token = 0) const;

  // Samples m codes per row of pc and averages them.
  std::pair<Matrix, Assignment> quantize(const Matrix& pc, int m, core::RngStream& rng) const;

  // EMA update from a batch; assignments[b] pairs with encoder_outputs[b].
  void ema_update(std::span<const Assignment> assignments, std::span<const Matrix> encoder_outputs,
                  bool shrink_unused = false);

 private:
  core::Parameter embeddings_;
  std::vector<double> counts_;
  double temperature_;
  double decay_;
  CodebookMode mode_;
  int partitions_;
};

// m i.i.d. categorical draws from softmax(logits).
std::vector<int> sample_codes(std::span<const double> logits, int m, core::RngStream& rng);

// Softmax probabilities of a logit vector, -infinity entries map to 0.
std::vector<double> code_probabilities(std::span<const double> logits);

// beta * sum_i ||pc_i - sg(pq_i)||^2.
core::Var commitment_loss(core::Var pc, const Matrix& pq, double beta);

UsageStats usage_stats(std::span<const Assignment> window, int codebook_size);
double perplexity(std::span<const double> frequency);

}  // namespace vip::vq
