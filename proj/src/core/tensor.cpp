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

#include "vip/core/tensor.hpp"

#include <bit>
#include <sstream>

#include "vip/core/error.hpp"

namespace vip::core {

std::string_view group_name(Group g) {
  switch (g) {
    case Group::kPrompt: return "prompt";
    case Group::kEncoder: return "encoder";
    case Group::kCodebook: return "codebook";
    case Group::kPlm: return "plm";
  }
  return "unknown";
}

Group parse_group(std::string_view name) {
  if (name == "prompt") return Group::kPrompt;
  if (name == "encoder") return Group::kEncoder;
  if (name == "codebook") return Group::kCodebook;
  if (name == "plm") return Group::kPlm;
  fail(ErrorCode::kInvalidArtifact, "unknown parameter group '" + std::string(name) + "'");
}

void Parameter::zero_grad() const {
  if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
    grad = Matrix::Zero(value.rows(), value.cols());
  } else {
    grad.setZero();
  }
}

std::vector<std::size_t> shape_of(const Matrix& m) {
  return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << "[" << m.rows() << "x" << m.cols() << "]";
  return os.str();
}

std::uint64_t checksum(const Matrix& m, std::uint64_t h) {
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  auto mix = [&](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= kPrime;
    }
  };
  mix(static_cast<std::uint64_t>(m.rows()));
  mix(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) mix(std::bit_cast<std::uint64_t>(m.data()[i]));
  return h;
}

std::uint64_t checksum(const std::vector<const Parameter*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Parameter* p : params) h = checksum(p->value, h);
  return h;
}

std::size_t count_scalars(const std::vector<const Parameter*>& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->size();
  return n;
}

}  // namespace vip::core
