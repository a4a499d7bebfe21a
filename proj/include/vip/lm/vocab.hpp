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
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vip::lm {

// Fixed id layout shared by the model, the pretraining corpus, and every
// downstream task:
//
//   0        <pad>
//   1        </s>
//   2        <bos>            decoder start
//   3..6     <extra_id_0..3>  infilling sentinels
//   7        <copy>           pretraining task descriptor
//   8        <infill>         pretraining task descriptor
//   9..16    downstream task descriptors (<parity>, <contains>, <pair>,
//            <majority>, <task_4>..<task_7>)
//   17..24   label tokens (<even>, <odd>, <yes>, <no>, <same>, <diff>,
//            <first>, <second>)
//   25..     content symbols s0, s1, ...
namespace ids {
inline constexpr int kPad = 0;
inline constexpr int kEos = 1;
inline constexpr int kBos = 2;
inline constexpr int kSentinelBase = 3;
inline constexpr int kNumSentinels = 4;
inline constexpr int kCopyTask = 7;
inline constexpr int kInfillTask = 8;
inline constexpr int kTaskBase = 9;
inline constexpr int kNumTasks = 8;
inline constexpr int kLabelBase = 17;
inline constexpr int kNumLabels = 8;
inline constexpr int kContentBase = 25;
}  // namespace ids

class Vocab {
 public:
  // Needs room for at least 8 content symbols.
  explicit Vocab(int size = 80);

  int size() const { return static_cast<int>(symbols_.size()); }
  int num_content() const { return size() - ids::kContentBase; }
  int content_id(int k) const;
  int label_id(std::string_view name) const;

  int id(std::string_view symbol) const;
  const std::string& symbol(int id) const;
  bool contains(std::string_view symbol) const;

  std::vector<int> encode(std::span<const std::string> symbols) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace vip::lm
