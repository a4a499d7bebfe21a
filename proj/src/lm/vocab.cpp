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

#include "vip/lm/vocab.hpp"

#include "vip/core/error.hpp"

namespace vip::lm {

Vocab::Vocab(int size) {
  require(size >= ids::kContentBase + 8, ErrorCode::kConfig,
          "vocab size " + std::to_string(size) + " too small; need at least " +
              std::to_string(ids::kContentBase + 8));
  symbols_ = {"<pad>", "</s>", "<bos>"};
  for (int i = 0; i < ids::kNumSentinels; ++i) symbols_.push_back("<extra_id_" + std::to_string(i) + ">");
  symbols_.push_back("<copy>");
  symbols_.push_back("<infill>");
  for (const char* t : {"<parity>", "<contains>", "<pair>", "<majority>"}) symbols_.emplace_back(t);
  for (int i = 4; i < ids::kNumTasks; ++i) symbols_.push_back("<task_" + std::to_string(i) + ">");
  for (const char* l : {"<even>", "<odd>", "<yes>", "<no>", "<same>", "<diff>", "<first>", "<second>"})
    symbols_.emplace_back(l);
  for (int k = 0; static_cast<int>(symbols_.size()) < size; ++k) symbols_.push_back("s" + std::to_string(k));
  for (std::size_t i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], static_cast<int>(i));
}

int Vocab::content_id(int k) const {
  require(k >= 0 && k < num_content(), ErrorCode::kConfig,
          "content symbol s" + std::to_string(k) + " outside vocabulary");
  return ids::kContentBase + k;
}

int Vocab::label_id(std::string_view name) const {
  const int i = id("<" + std::string(name) + ">");
  require(i >= ids::kLabelBase && i < ids::kLabelBase + ids::kNumLabels, ErrorCode::kConfig,
          "'" + std::string(name) + "' is not a label token");
  return i;
}

int Vocab::id(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  require(it != index_.end(), ErrorCode::kRuntime, "unknown symbol '" + std::string(symbol) + "'");
  return it->second;
}

const std::string& Vocab::symbol(int i) const {
  require(i >= 0 && i < size(), ErrorCode::kRuntime, "token id " + std::to_string(i) + " out of range");
  return symbols_[static_cast<std::size_t>(i)];
}

bool Vocab::contains(std::string_view symbol) const { return index_.contains(std::string(symbol)); }

std::vector<int> Vocab::encode(std::span<const std::string> symbols) const {
  std::vector<int> out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) out.push_back(id(s));
  return out;
}

std::vector<std::string> Vocab::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(symbol(i));
  return out;
}

}  // namespace vip::lm
