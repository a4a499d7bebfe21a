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

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vip::core {

// Row-major so that one row is one token in a sequence.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

enum class Group { kPrompt, kEncoder, kCodebook, kPlm };

std::string_view group_name(Group g);
Group parse_group(std::string_view name);

// A named learnable tensor. Codebook-group tensors are only ever changed by
// EMA updates; plm-group tensors are immutable once the owning model is
// frozen. Optimizers refuse both.
struct Parameter {
  std::string name;
  Matrix value;
  // Scratch buffer written by Tape::backward, also through const access.
  mutable Matrix grad;
  bool trainable = true;
  Group group = Group::kEncoder;

  Parameter() = default;
  Parameter(std::string n, Matrix v, Group g, bool train = true)
      : name(std::move(n)), value(std::move(v)), trainable(train), group(g) {}

  std::size_t size() const { return static_cast<std::size_t>(value.size()); }
  void zero_grad() const;
};

std::vector<std::size_t> shape_of(const Matrix& m);
std::string shape_str(const Matrix& m);

// FNV-1a over the raw IEEE-754 bit patterns. Bitwise-sensitive by intent.
std::uint64_t checksum(const Matrix& m, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t checksum(const std::vector<const Parameter*>& params);

std::size_t count_scalars(const std::vector<const Parameter*>& params);

}  // namespace vip::core
