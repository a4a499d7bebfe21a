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

#include "vip/app/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "vip/core/error.hpp"

namespace vip::app {

namespace fs = std::filesystem;

void atomic_write(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) ensure_dir(target.parent_path().string());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::kRuntime, "cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    require(static_cast<bool>(out), ErrorCode::kRuntime, "short write to '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorCode::kRuntime, "cannot rename into '" + path + "': " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingArtifact, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kRuntime, "cannot create directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metrics_csv(std::span<const train::MetricsRecord> records) {
  std::string out = "step,split,task,metric,value\n";
  for (const auto& r : records)
    for (const auto& [name, value] : train::metric_values(r))
      out += std::to_string(r.step) + "," + r.split + "," + r.task + "," + name + "," + format_double(value) + "\n";
  return out;
}

namespace {

std::string ids_line(std::span<const int> ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(ids[i]);
  }
  return s;
}

std::vector<int> parse_ids(const std::string& s, std::size_t line) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == tok.size() && v >= 0, ErrorCode::kInvalidArtifact,
            "dataset line " + std::to_string(line) + ": bad token id '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string dump_dataset(const nlohmann::json& header, std::span<const tasks::TextSample> samples) {
  std::string out = header.dump() + "\n";
  for (const auto& s : samples) out += ids_line(s.input) + "\t" + ids_line(s.target) + "\n";
  return out;
}

DatasetFile load_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kInvalidArtifact, "dataset: missing header line");
  DatasetFile f;
  try {
    f.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kInvalidArtifact, "dataset: header is not JSON");
  }
  require(f.header.is_object() && f.header.value("format", "") == "viplab-dataset", ErrorCode::kInvalidArtifact,
          "dataset: not a viplab dataset");
  require(f.header.value("version", 0) == 1, ErrorCode::kInvalidArtifact, "dataset: unsupported version");
  const int hard = f.header.value("hard_prompt_length", 0);
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    require(tab != std::string::npos, ErrorCode::kInvalidArtifact,
            "dataset line " + std::to_string(n) + ": expected input_ids<TAB>target_ids");
    tasks::TextSample s;
    s.input = parse_ids(line.substr(0, tab), n);
    s.target = parse_ids(line.substr(tab + 1), n);
    s.hard_len = hard;
    require(static_cast<int>(s.input.size()) > hard && !s.target.empty(), ErrorCode::kInvalidArtifact,
            "dataset line " + std::to_string(n) + ": empty input or target");
    f.samples.push_back(std::move(s));
  }
  require(f.header.value("count", -1) == static_cast<int>(f.samples.size()), ErrorCode::kInvalidArtifact,
          "dataset: header count does not match the number of samples");
  return f;
}

}  // namespace vip::app
