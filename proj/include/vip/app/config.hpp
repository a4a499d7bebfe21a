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
#include <string>
#include <vector>

#include <json.hpp>

#include "vip/lm/pretrain.hpp"
#include "vip/prompt/prompt_model.hpp"
#include "vip/tasks/tasks.hpp"
#include "vip/train/train.hpp"

namespace vip::app {

using nlohmann::json;

struct TaskEntry {
  tasks::TaskSpec spec;
  tasks::DomainShift ood;
  friend bool operator==(const TaskEntry&, const TaskEntry&) = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;           // run seed for model init, dropout and sampling
  std::string plm_checkpoint;       // pretrain-plm output; empty pretrains in-process
  lm::LMConfig lm;
  lm::PretrainConfig pretrain;
  std::uint64_t pretrain_seed = 0;  // PLM init and corpus draws
  prompt::ModelConfig model;
  std::uint64_t data_seed = 1234;
  tasks::SplitSizes sizes;
  int mixture_cap = 0;              // per-task cap for multi-task training; 0 keeps all
  std::vector<TaskEntry> tasks;     // resolved; never empty after parsing
  train::TrainConfig train;
  std::vector<std::string> compare_methods{"PT", "VIP"};

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Unknown keys at any level are rejected with ErrorCode::kConfig.
ExperimentConfig config_from_json(const json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
json config_to_json(const ExperimentConfig& cfg);

// Model config for a compare method name, starting from the experiment's.
prompt::ModelConfig method_config(const ExperimentConfig& cfg, const std::string& method);

}  // namespace vip::app
