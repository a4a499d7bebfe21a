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
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vip/core/optim.hpp"
#include "vip/prompt/prompt_model.hpp"

namespace vip::train {

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

struct TrainConfig {
  double prompt_lr = 0.3;
  double other_lr = 1e-3;
  core::OptimizerKind optimizer = core::OptimizerKind::kSgd;
  int batch_size = 32;
  int max_steps = 600;
  int eval_interval = 50;
  int patience = 5;
  int eval_limit = 0;      // dev samples per evaluation; 0 uses all
  int probe_count = 32;    // dev inputs for the collapse statistic
  bool f32 = false;
  std::vector<std::uint64_t> seeds{0, 1, 2};

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct MetricsRecord {
  int step = 0;
  std::string split;
  std::string task;
  double accuracy = kNotApplicable;
  double ce = kNotApplicable;
  double commitment = kNotApplicable;
  double nr = kNotApplicable;
  double perplexity = kNotApplicable;
  double pc_variance = kNotApplicable;
  double total = kNotApplicable;
};

// (metric name, value) pairs of the record, skipping unset metrics.
std::vector<std::pair<std::string, double>> metric_values(const MetricsRecord& r);

struct TrainData {
  std::vector<tasks::TextSample> train;
  std::vector<std::string> tasks;
  std::vector<std::vector<tasks::TextSample>> dev;  // per task
};

TrainData single_task(const std::string& name, const tasks::DatasetSplit& split);
TrainData mixture_data(const tasks::Mixture& m);

struct Snapshot {
  std::vector<core::Matrix> values;
  std::vector<double> counts;
};
Snapshot capture(prompt::PromptModel& model);
void restore(prompt::PromptModel& model, const Snapshot& s);

struct TrainResult {
  std::vector<MetricsRecord> history;
  double best_dev = -1.0;
  int best_step = 0;
  int steps_run = 0;
  bool early_stopped = false;
  std::vector<core::RngStream> streams;  // final batch, dropout and sampling streams
};

using Logger = std::function<void(const std::string&)>;

// Leaves the model at the best dev checkpoint.
TrainResult train(prompt::PromptModel& model, const TrainData& data, const TrainConfig& cfg, std::uint64_t seed,
                  const Logger& log = nullptr);

// Greedy-decode every sample against its target. The sampling stream is
// derived from the seed alone, so repeated calls agree bitwise.
MetricsRecord evaluate(const prompt::PromptModel& model, std::span<const tasks::TextSample> samples,
                       const std::string& split, const std::string& task, std::uint64_t seed, int limit = 0);

// Mean over prompt rows of the trace of the covariance (unbiased) of the
// input-dependent prompt across probe inputs.
double collapse_diagnostic(const prompt::PromptModel& model, std::span<const std::vector<int>> probes);
double collapse_statistic(std::span<const core::Matrix> representations);

struct CompareTask {
  std::string name;
  tasks::DatasetSplit split;
};

struct CompareMethod {
  std::string name;
  prompt::ModelConfig model;
};

struct ComparisonRow {
  std::string method;
  std::string task;
  std::vector<std::uint64_t> seeds;
  std::vector<double> test, ood;
  double test_mean = 0.0, ood_mean = 0.0;
  std::optional<double> test_std, ood_std;  // present with >= 2 seeds
};

struct ComparisonSummary {
  std::vector<ComparisonRow> rows;
  std::vector<MetricsRecord> history;  // all runs, task field "<task>/<method>/<seed>"
};

ComparisonSummary compare_methods(std::span<const CompareMethod> methods, std::span<const CompareTask> tasks,
                                  std::span<const std::uint64_t> seeds, const TrainConfig& cfg,
                                  std::shared_ptr<const lm::LanguageModel> plm, const Logger& log = nullptr);

double mean(std::span<const double> v);
double sample_std(std::span<const double> v);

}  // namespace vip::train
