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
#include <string>
#include <vector>

#include <json.hpp>

#include "vip/prompt/prompt_model.hpp"
#include "vip/vq/quantizer.hpp"

namespace vip::app {

struct Pca {
  core::Matrix components;         // k x d, unit rows
  std::vector<double> variances;   // per component
  double total_variance = 0.0;
  core::Matrix projections;        // N x k
};

// Top-k principal components of the rows of x by power iteration with
// deflation on the (N-1)-normalized covariance.
Pca pca(const core::Matrix& x, int k = 2, double tol = 1e-9, int max_iter = 100000);

// hits[t][code][label]: draws of `code` by prompt token t on samples with
// label index `label`.
struct LabelTally {
  int codebook_size = 0;
  int num_labels = 0;
  std::vector<std::vector<std::vector<double>>> hits;
};

LabelTally tally(std::span<const vq::Assignment> assignments, std::span<const int> labels, int codebook_size,
                 int num_labels);

struct CodeStats {
  int code = 0;
  double hits = 0.0;
  double frequency = 0.0;
  std::vector<double> label_distribution;  // empty when never sampled
  double entropy = 0.0;
  int dedication = -1;                      // modal label, -1 when never sampled
};

struct TokenSelection {
  int token = 0;
  std::vector<int> codes;  // one per label where a candidate exists
  std::vector<int> labels;
};

struct CodebookReport {
  std::vector<std::string> labels;
  std::vector<CodeStats> codes;            // aggregated over tokens, all K
  std::vector<TokenSelection> selections;  // per prompt token
  std::vector<int> pca_codes;
  core::Matrix pca_coordinates;            // |pca_codes| x 2
};

CodeStats code_stats(int code, std::span<const double> label_hits, double total_draws);

// For each token and label, the sampled code with that modal label and the
// lowest entropy (lowest index on ties), then PCA of the selected vectors.
CodebookReport build_report(const LabelTally& t, const core::Matrix& codebook, std::vector<std::string> label_names);

// Quantizes every sample (dropout off) and builds the report. Labels are the
// first target token of each sample.
CodebookReport analyze_codebook(const prompt::PromptModel& model, std::span<const tasks::TextSample> samples,
                                std::uint64_t seed);

nlohmann::json report_to_json(const CodebookReport& r);

nlohmann::json export_codebook(const vq::Codebook& cb, const nlohmann::json& config);
// Returns (vectors, counts) of an export document.
std::pair<core::Matrix, std::vector<double>> import_codebook(const nlohmann::json& j);

}  // namespace vip::app
