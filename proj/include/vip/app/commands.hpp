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

#include <memory>
#include <string>

#include "vip/app/checkpoint.hpp"
#include "vip/app/config.hpp"
#include "vip/train/train.hpp"

namespace vip::app {

// Loads cfg.plm_checkpoint when set (its LM config must match), otherwise
// pretrains in-process with cfg.pretrain_seed.
std::shared_ptr<const lm::LanguageModel> obtain_plm(const ExperimentConfig& cfg, const train::Logger& log);

// Per-task splits generated from the config's data section.
std::vector<tasks::DatasetSplit> build_splits(const ExperimentConfig& cfg);

// Each command writes into out_dir, including the resolved config.json.
void cmd_pretrain(const ExperimentConfig& cfg, const std::string& out_dir, const train::Logger& log);
void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir, const train::Logger& log);
void cmd_eval(const Checkpoint& ckpt, const std::string& split, const std::string& out_dir, const train::Logger& log);
void cmd_compare(const ExperimentConfig& cfg, const std::string& out_dir, const train::Logger& log);
void cmd_export_codebook(const Checkpoint& ckpt, const std::string& out_dir);
void cmd_analyze_codebook(const ExperimentConfig& cfg, const Checkpoint& ckpt, const std::string& out_dir);
void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir);

std::string summary_csv(const train::ComparisonSummary& s, const std::vector<double>& majority);

}  // namespace vip::app
