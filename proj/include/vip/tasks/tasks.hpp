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
#include <string_view>
#include <vector>

#include "vip/core/rng.hpp"
#include "vip/lm/vocab.hpp"

namespace vip::tasks {

enum class Family { kParity, kContainment, kPairRelation, kMajority };

std::string_view family_name(Family f);
Family parse_family(std::string_view s);

// Semantic symbols and label index per family:
//   parity        {marker}  0 even marker count, 1 odd
//   containment   {a, b}    0 no adjacent "a b", 1 present
//   pair-relation {marker}  0 the symbols after the two markers match, 1 differ
//   majority      {A, B}    0 A occurs more often than B, 1 B does
// Filler symbols never include a semantic symbol.
struct TaskSpec {
  std::string name;
  Family family = Family::kParity;
  int descriptor = lm::ids::kTaskBase;
  std::vector<int> filler;
  std::vector<int> semantic;
  std::vector<int> labels;  // {negative-or-first-class, other-class}, index = label
  int min_len = 4;
  int max_len = 12;
  int max_count = 4;  // parity marker and majority candidate occurrence cap
  double skew = 0.0;  // Zipf exponent over filler; 0 is uniform
  std::uint64_t seed = 0;

  void validate(const lm::Vocab& vocab) const;
  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

enum class ShiftKind { kIdentity, kSymbolPermutation, kLengthShift, kFrequencySkew };

std::string_view shift_name(ShiftKind k);
ShiftKind parse_shift(std::string_view s);

struct DomainShift {
  ShiftKind kind = ShiftKind::kIdentity;
  std::vector<int> targets;  // permutation image of spec.filler, same order
  int min_len = 0;           // length shift; 0 keeps the source value
  int max_len = 0;
  double skew = 0.0;         // frequency skew exponent
  friend bool operator==(const DomainShift&, const DomainShift&) = default;
};

struct Sample {
  std::vector<int> tokens;
  int label = 0;
  friend bool operator==(const Sample&, const Sample&) = default;
};

// Text-to-text view: input = [descriptor, label options..., content...],
// target = [label, eos]. The first hard_len input tokens form the hard prompt.
struct TextSample {
  std::vector<int> input;
  std::vector<int> target;
  int hard_len = 0;
  int task = 0;  // index into the task list of a mixture
  std::span<const int> hard() const { return {input.data(), static_cast<std::size_t>(hard_len)}; }
  std::span<const int> content() const {
    return {input.data() + hard_len, input.size() - static_cast<std::size_t>(hard_len)};
  }
  friend bool operator==(const TextSample&, const TextSample&) = default;
};

struct SplitSizes {
  int train = 2000;
  int dev = 500;
  int test = 500;
  int ood = 500;
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

struct DatasetSplit {
  std::vector<TextSample> train, dev, test, ood;
};

std::vector<Sample> generate(const TaskSpec& spec, int count, core::RngStream& rng);

// Independent rule used as the labeling oracle. Returns -1 when the sequence
// matches no label (for example a pair-relation sample without two markers).
int oracle_label(const TaskSpec& spec, std::span<const int> tokens);

TaskSpec make_ood(const TaskSpec& spec, const DomainShift& shift);
Sample apply_shift(const TaskSpec& spec, const DomainShift& shift, const Sample& s);

TextSample to_text_to_text(const Sample& s, const TaskSpec& spec, int task_index = 0);

// Streams are keyed by the spec seed, task name and split, so the four splits
// never share draws.
DatasetSplit make_splits(const TaskSpec& spec, const DomainShift& ood_shift, const SplitSizes& sizes);

struct Mixture {
  std::vector<std::string> names;
  std::vector<TextSample> train;
  std::vector<std::vector<TextSample>> dev;  // per task
};

Mixture multi_task_mixture(std::span<const TaskSpec> specs, std::span<const DatasetSplit> splits, int cap,
                           std::uint64_t seed);

// Four tasks over a shared filler alphabet with distinct descriptors; each
// carries its default out-of-domain shift.
struct SuiteEntry {
  TaskSpec spec;
  DomainShift ood;
};
std::vector<SuiteEntry> default_suite(const lm::Vocab& vocab, std::uint64_t seed);

}  // namespace vip::tasks
