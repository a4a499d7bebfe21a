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

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vip/tasks/tasks.hpp"
#include "vip/train/train.hpp"

namespace vip::app {

// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
void ensure_dir(const std::string& dir);
std::string join(const std::string& dir, const std::string& name);

std::string format_double(double v);

// Long format: step,split,task,metric,value.
std::string metrics_csv(std::span<const train::MetricsRecord> records);

struct DatasetFile {
  nlohmann::json header;
  std::vector<tasks::TextSample> samples;
};

// First line: JSON header; then one "input_ids<TAB>target_ids" line per
// sample with space-separated ids.
std::string dump_dataset(const nlohmann::json& header, std::span<const tasks::TextSample> samples);
DatasetFile load_dataset(const std::string& text);

}  // namespace vip::app
