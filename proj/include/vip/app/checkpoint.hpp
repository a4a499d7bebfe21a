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
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vip/app/config.hpp"
#include "vip/lm/model.hpp"
#include "vip/prompt/prompt_model.hpp"
#include "vip/train/train.hpp"

namespace vip::app {

inline constexpr int kCheckpointVersion = 1;

struct TensorRecord {
  std::string name;
  core::Group group = core::Group::kPlm;
  bool trainable = false;
  core::Matrix value;
};

struct Checkpoint {
  std::string kind;  // "plm" or "model"
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string variant;
  std::uint64_t plm_checksum = 0;
  std::vector<TensorRecord> plm;
  std::vector<TensorRecord> tensors;
  std::vector<double> codebook_counts;
  std::vector<core::RngStream> rng;
  nlohmann::json train = nlohmann::json::object();
};

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_plm_checkpoint(const ExperimentConfig& cfg, const lm::LanguageModel& plm);
Checkpoint make_model_checkpoint(const ExperimentConfig& cfg, const prompt::PromptModel& model,
                                 const train::TrainResult* result);

// Rebuilds and freezes the PLM; the stored checksum must match.
std::shared_ptr<const lm::LanguageModel> restore_plm(const Checkpoint& c);
std::unique_ptr<prompt::PromptModel> restore_model(const Checkpoint& c);
ExperimentConfig checkpoint_config(const Checkpoint& c);

std::string hex64(std::uint64_t v);

}  // namespace vip::app
