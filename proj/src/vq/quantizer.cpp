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

#include "vip/vq/quantizer.hpp"

#include <cmath>
#include <limits>

#include "vip/core/error.hpp"

namespace vip::vq {

namespace ops = core::ops;

void QuantizerConfig::validate() const {
  require(codebook_size >= 1, ErrorCode::kConfig, "quantizer: codebook_size must be >= 1");
  require(samples >= 1, ErrorCode::kConfig, "quantizer: samples must be >= 1");
  require(!temperature || *temperature > 0.0, ErrorCode::kConfig, "quantizer: temperature must be > 0");
  require(commitment_cost >= 0.0, ErrorCode::kConfig, "quantizer: commitment_cost must be >= 0");
  require(decay >= 0.0 && decay < 1.0, ErrorCode::kConfig, "quantizer: decay must be in [0,1)");
}

double QuantizerConfig::resolve_temperature(int d) const {
  if (temperature) return *temperature;
  return d == 768 ? 100.0 : static_cast<double>(d);
}

Codebook::Codebook(int codebook_size, int d, double temperature, double decay, CodebookMode mode,
                   int partitions, core::RngStream& init)
    : counts_(static_cast<std::size_t>(codebook_size), 1.0),
      temperature_(temperature),
      decay_(decay),
      mode_(mode),
      partitions_(partitions) {
  require(codebook_size >= 1 && d >= 1, ErrorCode::kConfig, "codebook: sizes must be positive");
  require(temperature > 0.0, ErrorCode::kConfig, "codebook: temperature must be > 0");
  require(decay >= 0.0 && decay < 1.0, ErrorCode::kConfig, "codebook: decay must be in [0,1)");
  if (mode == CodebookMode::kDedicated) {
    require(partitions >= 1 && codebook_size % partitions == 0, ErrorCode::kConfig,
            "codebook: dedicated mode needs K=" + std::to_string(codebook_size) +
                " divisible by the prompt length " + std::to_string(partitions));
  }
  embeddings_.name = "codebook";
  embeddings_.group = core::Group::kCodebook;
  embeddings_.trainable = false;
  embeddings_.value.resize(codebook_size, d);
  for (Eigen::Index i = 0; i < embeddings_.value.size(); ++i) embeddings_.value.data()[i] = init.normal();
}

void Codebook::set_temperature(double tau) {
  require(tau > 0.0, ErrorCode::kConfig, "codebook: temperature must be > 0");
  temperature_ = tau;
}

std::pair<int, int> Codebook::partition(int token) const {
  if (mode_ == CodebookMode::kShared) return {0, size()};
  require(token >= 0 && token < partitions_, ErrorCode::kRuntime,
          "codebook: token " + std::to_string(token) + " outside " + std::to_string(partitions_) + " partitions");
  const int w = size() / partitions_;
  return {token * w, (token + 1) * w};
}

void Codebook::set_state(Matrix embeddings, std::vector<double> counts) {
  require(embeddings.rows() == embeddings_.value.rows() && embeddings.cols() == embeddings_.value.cols(),
          ErrorCode::kInvalidArtifact, "codebook: embedding shape mismatch");
  require(counts.size() == counts_.size(), ErrorCode::kInvalidArtifact, "codebook: count length mismatch");
  for (double c : counts) require(c > 0.0, ErrorCode::kInvalidArtifact, "codebook: counts must be positive");
  embeddings_.value = std::move(embeddings);
  counts_ = std::move(counts);
}

std::vector<double> Codebook::logits(const RowVector& p, int token) const {
  require(p.size() == dim(), ErrorCode::kRuntime,
          "logits: width " + std::to_string(p.size()) + " vs codebook width " + std::to_string(dim()));
  require(temperature_ > 0.0, ErrorCode::kConfig, "logits: temperature must be > 0");
  const auto [begin, end] = partition(token);
  std::vector<double> out(static_cast<std::size_t>(size()), -std::numeric_limits<double>::infinity());
  for (int k = begin; k < end; ++k) out[k] = -(p - embeddings_.value.row(k)).squaredNorm() / temperature_;
  return out;
}

std::pair<Matrix, Assignment> Codebook::quantize(const Matrix& pc, int m, core::RngStream& rng) const {
  require(pc.cols() == dim(), ErrorCode::kRuntime, "quantize: width mismatch");
  require(m >= 1, ErrorCode::kConfig, "quantize: m must be >= 1");
  Matrix pq = Matrix::Zero(pc.rows(), pc.cols());
  Assignment a;
  a.codes.reserve(static_cast<std::size_t>(pc.rows()));
  for (Eigen::Index i = 0; i < pc.rows(); ++i) {
    RowVector row = pc.row(i);
    auto codes = sample_codes(logits(row, static_cast<int>(i)), m, rng);
    for (int z : codes) pq.row(i) += embeddings_.value.row(z);
    pq.row(i) /= static_cast<double>(m);
    a.codes.push_back(std::move(codes));
  }
  return {std::move(pq), std::move(a)};
}

void Codebook::ema_update(std::span<const Assignment> assignments, std::span<const Matrix> encoder_outputs,
                          bool shrink_unused) {
  require(assignments.size() == encoder_outputs.size(), ErrorCode::kRuntime,
          "ema_update: assignment and output batch sizes differ");
  const int K = size();
  std::vector<double> hits(static_cast<std::size_t>(K), 0.0);
  Matrix sums = Matrix::Zero(K, dim());
  for (std::size_t b = 0; b < assignments.size(); ++b) {
    const auto& codes = assignments[b].codes;
    const Matrix& pc = encoder_outputs[b];
    require(static_cast<Eigen::Index>(codes.size()) == pc.rows() && pc.cols() == dim(), ErrorCode::kRuntime,
            "ema_update: assignment does not match encoder output shape");
    for (std::size_t i = 0; i < codes.size(); ++i) {
      for (int z : codes[i]) {
        require(z >= 0 && z < K, ErrorCode::kRuntime, "ema_update: code index out of range");
        hits[z] += 1.0;
        sums.row(z) += pc.row(static_cast<Eigen::Index>(i));
      }
    }
  }
  for (int j = 0; j < K; ++j) {
    counts_[j] = decay_ * counts_[j] + (1.0 - decay_) * hits[j];
    if (hits[j] == 0.0 && !shrink_unused) continue;
    embeddings_.value.row(j) = decay_ * embeddings_.value.row(j) + (1.0 - decay_) * sums.row(j) / counts_[j];
  }
}

std::vector<double> code_probabilities(std::span<const double> logits) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double l : logits) mx = std::max(mx, l);
  require(std::isfinite(mx), ErrorCode::kRuntime, "sample_codes: no finite logit");
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::isfinite(logits[k]) ? std::exp(logits[k] - mx) : 0.0;
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<int> sample_codes(std::span<const double> logits, int m, core::RngStream& rng) {
  require(m >= 1, ErrorCode::kConfig, "sample_codes: m must be >= 1");
  require(!logits.empty(), ErrorCode::kRuntime, "sample_codes: empty logits");
  const auto p = code_probabilities(logits);
  std::vector<int> out(static_cast<std::size_t>(m));
  for (int& z : out) z = static_cast<int>(rng.categorical(p));
  return out;
}

core::Var commitment_loss(core::Var pc, const Matrix& pq, double beta) {
  require(pc.rows() == pq.rows() && pc.cols() == pq.cols(), ErrorCode::kRuntime,
          "commitment_loss: shape mismatch " + core::shape_str(pc.value()) + " vs " + core::shape_str(pq));
  core::Var target = pc.tape()->constant(pq);
  return ops::scale(ops::sum_squares(ops::sub(pc, target)), beta);
}

double perplexity(std::span<const double> frequency) {
  double h = 0.0;
  for (double f : frequency)
    if (f > 0.0) h -= f * std::log(f);
  return std::exp(h);
}

UsageStats usage_stats(std::span<const Assignment> window, int codebook_size) {
  require(codebook_size >= 1, ErrorCode::kConfig, "usage_stats: codebook_size must be >= 1");
  UsageStats s;
  s.frequency.assign(static_cast<std::size_t>(codebook_size), 0.0);
  double total = 0.0;
  for (const auto& a : window)
    for (const auto& codes : a.codes)
      for (int z : codes) {
        require(z >= 0 && z < codebook_size, ErrorCode::kRuntime, "usage_stats: code index out of range");
        s.frequency[z] += 1.0;
        total += 1.0;
      }
  require(total > 0.0, ErrorCode::kRuntime, "usage_stats: empty window");
  for (double& f : s.frequency) f /= total;
  s.perplexity = perplexity(s.frequency);
  return s;
}

}  // namespace vip::vq
