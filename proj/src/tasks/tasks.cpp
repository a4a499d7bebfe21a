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

#include "vip/tasks/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vip/core/error.hpp"

namespace vip::tasks {

namespace {

struct FamilyInfo {
  Family family;
  std::string_view name;
  std::size_t semantic;
  int min_len;
};

constexpr FamilyInfo kFamilies[] = {
    {Family::kParity, "parity", 1, 1},
    {Family::kContainment, "pattern-containment", 2, 2},
    {Family::kPairRelation, "marked-pair-relation", 1, 4},
    {Family::kMajority, "majority-symbol", 2, 1},
};

const FamilyInfo& info(Family f) {
  for (const auto& i : kFamilies)
    if (i.family == f) return i;
  fail(ErrorCode::kConfig, "unknown task family");
}

void check_structure(const TaskSpec& spec) {
  const auto& fi = info(spec.family);
  const std::string where = "task '" + spec.name + "': ";
  require(!spec.name.empty(), ErrorCode::kConfig, "task: name must not be empty");
  require(spec.semantic.size() == fi.semantic, ErrorCode::kConfig,
          where + std::string(fi.name) + " needs " + std::to_string(fi.semantic) + " semantic symbols");
  require(std::set<int>(spec.semantic.begin(), spec.semantic.end()).size() == spec.semantic.size(),
          ErrorCode::kConfig, where + "semantic symbols must be distinct");
  require(!spec.filler.empty(), ErrorCode::kConfig, where + "filler vocabulary is empty");
  require(std::set<int>(spec.filler.begin(), spec.filler.end()).size() == spec.filler.size(), ErrorCode::kConfig,
          where + "filler symbols must be distinct");
  for (int f : spec.filler)
    require(std::find(spec.semantic.begin(), spec.semantic.end(), f) == spec.semantic.end(), ErrorCode::kConfig,
            where + "filler overlaps a semantic symbol");
  require(spec.labels.size() == 2 && spec.labels[0] != spec.labels[1], ErrorCode::kConfig,
          where + "needs two distinct label tokens");
  require(spec.min_len >= fi.min_len, ErrorCode::kConfig,
          where + "min_len must be >= " + std::to_string(fi.min_len) + " for " + std::string(fi.name));
  require(spec.max_len >= spec.min_len, ErrorCode::kConfig, where + "max_len must be >= min_len");
  require(spec.max_count >= 1, ErrorCode::kConfig, where + "max_count must be >= 1");
  require(spec.skew >= 0.0 && std::isfinite(spec.skew), ErrorCode::kConfig, where + "skew must be >= 0");
  if (spec.family == Family::kPairRelation)
    require(spec.filler.size() >= 2, ErrorCode::kConfig, where + "pair relation needs at least 2 filler symbols");
}

class FillerSampler {
 public:
  explicit FillerSampler(const TaskSpec& spec) : filler_(spec.filler) {
    weights_.resize(filler_.size());
    for (std::size_t k = 0; k < filler_.size(); ++k)
      weights_[k] = spec.skew == 0.0 ? 1.0 : 1.0 / std::pow(static_cast<double>(k + 1), spec.skew);
  }
  int draw(core::RngStream& rng) const { return filler_[rng.categorical(weights_)]; }

 private:
  std::vector<int> filler_;
  std::vector<double> weights_;
};

int uniform_int(core::RngStream& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(hi - lo + 1)));
}

template <typename T>
void shuffle(std::vector<T>& v, core::RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

std::vector<int> positions(int len, core::RngStream& rng) {
  std::vector<int> p(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) p[i] = i;
  shuffle(p, rng);
  return p;
}

Sample draw(const TaskSpec& spec, const FillerSampler& fill, int label, core::RngStream& rng) {
  const int len = uniform_int(rng, spec.min_len, spec.max_len);
  Sample s;
  s.label = label;
  s.tokens.resize(static_cast<std::size_t>(len));
  for (int& t : s.tokens) t = fill.draw(rng);
  switch (spec.family) {
    case Family::kParity: {
      std::vector<int> counts;
      for (int k = 0; k <= std::min(spec.max_count, len); ++k)
        if (k % 2 == label) counts.push_back(k);
      const int k = counts[rng.uniform_index(counts.size())];
      const auto pos = positions(len, rng);
      for (int i = 0; i < k; ++i) s.tokens[pos[i]] = spec.semantic[0];
      break;
    }
    case Family::kContainment: {
      const int a = spec.semantic[0], b = spec.semantic[1];
      if (label == 1) {
        const int p = uniform_int(rng, 0, len - 2);
        s.tokens[p] = a;
        s.tokens[p + 1] = b;
      } else {
        switch (rng.uniform_index(4)) {
          case 0: break;
          case 1: s.tokens[rng.uniform_index(len)] = a; break;
          case 2: s.tokens[rng.uniform_index(len)] = b; break;
          default: {
            const int p = uniform_int(rng, 0, len - 2);
            s.tokens[p] = b;
            s.tokens[p + 1] = a;
          }
        }
      }
      break;
    }
    case Family::kPairRelation: {
      const int i = uniform_int(rng, 0, len - 4);
      const int j = uniform_int(rng, i + 2, len - 2);
      s.tokens[i] = spec.semantic[0];
      s.tokens[j] = spec.semantic[0];
      const int x = s.tokens[i + 1];
      int y = x;
      if (label == 1) {
        while (y == x) y = fill.draw(rng);
      }
      s.tokens[j + 1] = y;
      break;
    }
    case Family::kMajority: {
      const int cap = std::min(spec.max_count, len);
      const int w = uniform_int(rng, 1, cap);
      const int l = uniform_int(rng, 0, std::min(w - 1, len - w));
      const int winner = spec.semantic[label], loser = spec.semantic[1 - label];
      const auto pos = positions(len, rng);
      for (int i = 0; i < w; ++i) s.tokens[pos[i]] = winner;
      for (int i = w; i < w + l; ++i) s.tokens[pos[i]] = loser;
      break;
    }
  }
  return s;
}

}  // namespace

std::string_view family_name(Family f) { return info(f).name; }

Family parse_family(std::string_view s) {
  for (const auto& i : kFamilies)
    if (i.name == s) return i.family;
  fail(ErrorCode::kConfig, "unknown task family '" + std::string(s) + "'");
}

std::string_view shift_name(ShiftKind k) {
  switch (k) {
    case ShiftKind::kIdentity: return "identity";
    case ShiftKind::kSymbolPermutation: return "symbol-permutation";
    case ShiftKind::kLengthShift: return "length-shift";
    case ShiftKind::kFrequencySkew: return "frequency-skew";
  }
  return "?";
}

ShiftKind parse_shift(std::string_view s) {
  for (auto k : {ShiftKind::kIdentity, ShiftKind::kSymbolPermutation, ShiftKind::kLengthShift,
                 ShiftKind::kFrequencySkew})
    if (shift_name(k) == s) return k;
  fail(ErrorCode::kConfig, "unknown domain shift '" + std::string(s) + "'");
}

void TaskSpec::validate(const lm::Vocab& vocab) const {
  check_structure(*this);
  const std::string where = "task '" + name + "': ";
  require(descriptor >= lm::ids::kTaskBase && descriptor < lm::ids::kTaskBase + lm::ids::kNumTasks,
          ErrorCode::kConfig, where + "descriptor is not a task-description token");
  auto content = [&](int id) { return id >= lm::ids::kContentBase && id < vocab.size(); };
  for (int f : filler) require(content(f), ErrorCode::kConfig, where + "filler id outside the content vocabulary");
  for (int f : semantic) require(content(f), ErrorCode::kConfig, where + "semantic id outside the content vocabulary");
  for (int l : labels)
    require(l >= lm::ids::kLabelBase && l < lm::ids::kLabelBase + lm::ids::kNumLabels, ErrorCode::kConfig,
            where + "label id is not a label token");
}

std::vector<Sample> generate(const TaskSpec& spec, int count, core::RngStream& rng) {
  require(count >= 1, ErrorCode::kConfig, "generate: count must be >= 1");
  check_structure(spec);
  std::vector<int> labels(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) labels[i] = i % 2;
  shuffle(labels, rng);
  const FillerSampler fill(spec);
  std::vector<Sample> out;
  out.reserve(labels.size());
  for (int label : labels) out.push_back(draw(spec, fill, label, rng));
  return out;
}

int oracle_label(const TaskSpec& spec, std::span<const int> tokens) {
  const std::size_t n = tokens.size();
  switch (spec.family) {
    case Family::kParity: {
      int count = 0;
      for (int t : tokens) count += t == spec.semantic[0] ? 1 : 0;
      return count % 2;
    }
    case Family::kContainment:
      for (std::size_t i = 0; i + 1 < n; ++i)
        if (tokens[i] == spec.semantic[0] && tokens[i + 1] == spec.semantic[1]) return 1;
      return 0;
    case Family::kPairRelation: {
      std::vector<std::size_t> marks;
      for (std::size_t i = 0; i < n; ++i)
        if (tokens[i] == spec.semantic[0]) marks.push_back(i);
      if (marks.size() != 2 || marks[1] + 1 >= n || marks[0] + 1 == marks[1]) return -1;
      return tokens[marks[0] + 1] == tokens[marks[1] + 1] ? 0 : 1;
    }
    case Family::kMajority: {
      long a = std::count(tokens.begin(), tokens.end(), spec.semantic[0]);
      long b = std::count(tokens.begin(), tokens.end(), spec.semantic[1]);
      if (a == b) return -1;
      return a > b ? 0 : 1;
    }
  }
  return -1;
}

TaskSpec make_ood(const TaskSpec& spec, const DomainShift& shift) {
  check_structure(spec);
  TaskSpec out = spec;
  switch (shift.kind) {
    case ShiftKind::kIdentity: break;
    case ShiftKind::kSymbolPermutation: {
      require(shift.targets.size() == spec.filler.size(), ErrorCode::kConfig,
              "symbol-permutation: needs one target per filler symbol");
      for (int t : shift.targets) {
        require(std::find(spec.semantic.begin(), spec.semantic.end(), t) == spec.semantic.end(),
                ErrorCode::kConfig, "symbol-permutation: maps filler onto a semantic symbol, which changes labels");
        require(std::find(spec.labels.begin(), spec.labels.end(), t) == spec.labels.end(), ErrorCode::kConfig,
                "symbol-permutation: maps filler onto a label token");
      }
      out.filler = shift.targets;
      break;
    }
    case ShiftKind::kLengthShift:
      if (shift.min_len > 0) out.min_len = shift.min_len;
      if (shift.max_len > 0) out.max_len = shift.max_len;
      require(shift.min_len > 0 || shift.max_len > 0, ErrorCode::kConfig, "length-shift: no length given");
      break;
    case ShiftKind::kFrequencySkew:
      require(shift.skew > 0.0, ErrorCode::kConfig, "frequency-skew: exponent must be > 0");
      out.skew = shift.skew;
      break;
  }
  check_structure(out);
  return out;
}

Sample apply_shift(const TaskSpec& spec, const DomainShift& shift, const Sample& s) {
  if (shift.kind == ShiftKind::kIdentity) return s;
  require(shift.kind == ShiftKind::kSymbolPermutation, ErrorCode::kConfig,
          "apply_shift: only symbol permutations map individual samples");
  make_ood(spec, shift);
  Sample out = s;
  for (int& t : out.tokens) {
    auto it = std::find(spec.filler.begin(), spec.filler.end(), t);
    if (it != spec.filler.end()) t = shift.targets[static_cast<std::size_t>(it - spec.filler.begin())];
  }
  return out;
}

TextSample to_text_to_text(const Sample& s, const TaskSpec& spec, int task_index) {
  require(s.label >= 0 && s.label < static_cast<int>(spec.labels.size()), ErrorCode::kRuntime,
          "to_text_to_text: unknown label " + std::to_string(s.label) + " for task '" + spec.name + "'");
  TextSample t;
  t.input.push_back(spec.descriptor);
  t.input.insert(t.input.end(), spec.labels.begin(), spec.labels.end());
  t.hard_len = static_cast<int>(t.input.size());
  t.input.insert(t.input.end(), s.tokens.begin(), s.tokens.end());
  t.target = {spec.labels[static_cast<std::size_t>(s.label)], lm::ids::kEos};
  t.task = task_index;
  return t;
}

DatasetSplit make_splits(const TaskSpec& spec, const DomainShift& ood_shift, const SplitSizes& sizes) {
  require(sizes.train >= 1, ErrorCode::kConfig, "splits: train size must be >= 1");
  require(sizes.dev >= 0 && sizes.test >= 0 && sizes.ood >= 0, ErrorCode::kConfig, "splits: sizes must be >= 0");
  const core::RngStream base(spec.seed, "data/" + spec.name);
  auto build = [&](const TaskSpec& s, int count, std::string_view split) {
    std::vector<TextSample> out;
    if (count == 0) return out;
    auto rng = base.fork(split);
    for (const auto& x : generate(s, count, rng)) out.push_back(to_text_to_text(x, s));
    return out;
  };
  DatasetSplit d;
  d.train = build(spec, sizes.train, "train");
  d.dev = build(spec, sizes.dev, "dev");
  d.test = build(spec, sizes.test, "test");
  d.ood = build(make_ood(spec, ood_shift), sizes.ood, "ood");
  return d;
}

Mixture multi_task_mixture(std::span<const TaskSpec> specs, std::span<const DatasetSplit> splits, int cap,
                           std::uint64_t seed) {
  require(specs.size() >= 2, ErrorCode::kConfig, "mixture: needs at least two tasks");
  require(specs.size() == splits.size(), ErrorCode::kConfig, "mixture: one split per task");
  require(cap >= 1, ErrorCode::kConfig, "mixture: per-task cap must be >= 1");
  Mixture m;
  for (std::size_t t = 0; t < specs.size(); ++t) {
    m.names.push_back(specs[t].name);
    const auto& train = splits[t].train;
    const std::size_t take = std::min(train.size(), static_cast<std::size_t>(cap));
    for (std::size_t i = 0; i < take; ++i) {
      m.train.push_back(train[i]);
      m.train.back().task = static_cast<int>(t);
    }
    m.dev.push_back(splits[t].dev);
    for (auto& s : m.dev.back()) s.task = static_cast<int>(t);
  }
  core::RngStream rng(seed, "data/mixture");
  shuffle(m.train, rng);
  return m;
}

std::vector<SuiteEntry> default_suite(const lm::Vocab& vocab, std::uint64_t seed) {
  require(vocab.num_content() >= 36, ErrorCode::kConfig, "default suite: needs at least 36 content symbols");
  auto range = [&](int lo, int hi) {
    std::vector<int> v;
    for (int i = lo; i < hi; ++i) v.push_back(vocab.content_id(i));
    return v;
  };
  const std::vector<int> filler = range(4, 20);
  const std::vector<int> unseen = range(20, 36);
  auto spec = [&](std::string name, Family f, int slot, std::vector<int> semantic, std::vector<int> labels) {
    TaskSpec s;
    s.name = std::move(name);
    s.family = f;
    s.descriptor = lm::ids::kTaskBase + slot;
    s.filler = filler;
    s.semantic = std::move(semantic);
    s.labels = std::move(labels);
    s.seed = seed;
    return s;
  };
  const int s0 = vocab.content_id(0), s1 = vocab.content_id(1), s2 = vocab.content_id(2), s3 = vocab.content_id(3);
  std::vector<SuiteEntry> out;
  out.push_back({spec("parity", Family::kParity, 0, {s0}, {vocab.label_id("even"), vocab.label_id("odd")}),
                 DomainShift{ShiftKind::kLengthShift, {}, 13, 20, 0.0}});
  out.push_back({spec("containment", Family::kContainment, 1, {s1, s2}, {vocab.label_id("no"), vocab.label_id("yes")}),
                 DomainShift{ShiftKind::kSymbolPermutation, unseen, 0, 0, 0.0}});
  out.push_back({spec("pair", Family::kPairRelation, 2, {s3}, {vocab.label_id("same"), vocab.label_id("diff")}),
                 DomainShift{ShiftKind::kSymbolPermutation, unseen, 0, 0, 0.0}});
  out.push_back({spec("majority", Family::kMajority, 3, {s1, s2}, {vocab.label_id("first"), vocab.label_id("second")}),
                 DomainShift{ShiftKind::kFrequencySkew, {}, 0, 0, 1.5}});
  for (auto& e : out) e.spec.validate(vocab);
  return out;
}

}  // namespace vip::tasks
