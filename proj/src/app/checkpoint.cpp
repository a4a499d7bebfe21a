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

#include "vip/app/checkpoint.hpp"

#include <cstdio>

#include "vip/app/io.hpp"
#include "vip/core/error.hpp"

namespace vip::app {

using nlohmann::json;

namespace {

json tensor_to_json(const TensorRecord& t) {
  std::vector<double> data(t.value.data(), t.value.data() + t.value.size());
  return json{{"name", t.name},
              {"group", std::string(core::group_name(t.group))},
              {"trainable", t.trainable},
              {"shape", {t.value.rows(), t.value.cols()}},
              {"data", data}};
}

TensorRecord tensor_from_json(const json& j) {
  TensorRecord t;
  t.name = j.at("name").get<std::string>();
  t.group = core::parse_group(j.at("group").get<std::string>());
  t.trainable = j.at("trainable").get<bool>();
  const auto shape = j.at("shape").get<std::vector<long>>();
  require(shape.size() == 2 && shape[0] > 0 && shape[1] > 0, ErrorCode::kInvalidArtifact,
          "checkpoint: tensor '" + t.name + "' has a bad shape");
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<long>(data.size()) == shape[0] * shape[1], ErrorCode::kInvalidArtifact,
          "checkpoint: tensor '" + t.name + "' data length does not match its shape");
  t.value = Eigen::Map<const core::Matrix>(data.data(), shape[0], shape[1]);
  return t;
}

std::vector<TensorRecord> records(const std::vector<const core::Parameter*>& ps) {
  std::vector<TensorRecord> out;
  for (const auto* p : ps) out.push_back({p->name, p->group, p->trainable, p->value});
  return out;
}

void load_into(const std::vector<TensorRecord>& src, const std::vector<core::Parameter*>& dst, const char* what) {
  require(src.size() == dst.size(), ErrorCode::kInvalidArtifact,
          std::string("checkpoint: ") + what + " has " + std::to_string(src.size()) + " tensors, expected " +
              std::to_string(dst.size()));
  for (std::size_t i = 0; i < src.size(); ++i) {
    require(src[i].name == dst[i]->name, ErrorCode::kInvalidArtifact,
            std::string("checkpoint: ") + what + " tensor " + std::to_string(i) + " is '" + src[i].name +
                "', expected '" + dst[i]->name + "'");
    require(src[i].value.rows() == dst[i]->value.rows() && src[i].value.cols() == dst[i]->value.cols(),
            ErrorCode::kInvalidArtifact, "checkpoint: tensor '" + src[i].name + "' has the wrong shape");
    dst[i]->value = src[i].value;
  }
}

std::uint64_t parse_hex(const std::string& s) {
  require(s.size() == 16, ErrorCode::kInvalidArtifact, "checkpoint: bad checksum");
  std::uint64_t v = 0;
  for (char ch : s) {
    int d = ch >= '0' && ch <= '9' ? ch - '0' : ch >= 'a' && ch <= 'f' ? ch - 'a' + 10 : -1;
    require(d >= 0, ErrorCode::kInvalidArtifact, "checkpoint: bad checksum");
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json checkpoint_to_json(const Checkpoint& c) {
  json plm = json::array(), tensors = json::array(), rng = json::array();
  for (const auto& t : c.plm) plm.push_back(tensor_to_json(t));
  for (const auto& t : c.tensors) tensors.push_back(tensor_to_json(t));
  for (const auto& r : c.rng) rng.push_back({{"label", r.label()}, {"seed", r.seed()}, {"counter", r.counter()}});
  return json{{"format", "viplab-checkpoint"},
              {"version", kCheckpointVersion},
              {"kind", c.kind},
              {"config", c.config},
              {"seed", c.seed},
              {"variant", c.variant},
              {"plm_checksum", hex64(c.plm_checksum)},
              {"plm", plm},
              {"tensors", tensors},
              {"codebook_counts", c.codebook_counts},
              {"rng", rng},
              {"train", c.train}};
}

Checkpoint checkpoint_from_json(const json& j) {
  require(j.is_object() && j.value("format", "") == "viplab-checkpoint", ErrorCode::kInvalidArtifact,
          "checkpoint: not a viplab checkpoint");
  const int version = j.value("version", -1);
  require(version == kCheckpointVersion, ErrorCode::kInvalidArtifact,
          "checkpoint: version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  try {
    c.kind = j.at("kind").get<std::string>();
    c.config = j.at("config");
    c.seed = j.at("seed").get<std::uint64_t>();
    c.variant = j.at("variant").get<std::string>();
    c.plm_checksum = parse_hex(j.at("plm_checksum").get<std::string>());
    for (const auto& t : j.at("plm")) c.plm.push_back(tensor_from_json(t));
    for (const auto& t : j.at("tensors")) c.tensors.push_back(tensor_from_json(t));
    c.codebook_counts = j.at("codebook_counts").get<std::vector<double>>();
    for (const auto& r : j.at("rng")) {
      core::RngStream s(r.at("seed").get<std::uint64_t>(), r.at("label").get<std::string>());
      s.set_counter(r.at("counter").get<std::uint64_t>());
      c.rng.push_back(s);
    }
    c.train = j.at("train");
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArtifact, std::string("checkpoint: malformed: ") + e.what());
  }
  require(c.kind == "plm" || c.kind == "model", ErrorCode::kInvalidArtifact, "checkpoint: unknown kind '" + c.kind + "'");
  return c;
}

std::string serialize_checkpoint(const Checkpoint& c) { return checkpoint_to_json(c).dump() + "\n"; }

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArtifact, "checkpoint: not valid JSON");
  }
  return checkpoint_from_json(j);
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

Checkpoint make_plm_checkpoint(const ExperimentConfig& cfg, const lm::LanguageModel& plm) {
  Checkpoint c;
  c.kind = "plm";
  c.config = config_to_json(cfg);
  c.seed = cfg.seed;
  c.plm_checksum = plm.checksum();
  c.plm = records(plm.parameters());
  return c;
}

Checkpoint make_model_checkpoint(const ExperimentConfig& cfg, const prompt::PromptModel& model,
                                 const train::TrainResult* result) {
  Checkpoint c = make_plm_checkpoint(cfg, *model.frozen_lm());
  c.kind = "model";
  c.variant = std::string(prompt::variant_name(model.variant()));
  c.tensors = records(model.state_parameters());
  if (const auto* cb = model.codebook()) c.codebook_counts = cb->counts();
  if (result) {
    c.rng = result->streams;
    c.train = json{{"best_step", result->best_step},
                   {"best_dev", result->best_dev},
                   {"steps_run", result->steps_run},
                   {"early_stopped", result->early_stopped}};
  }
  return c;
}

ExperimentConfig checkpoint_config(const Checkpoint& c) {
  try {
    return config_from_json(c.config);
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidArtifact, std::string("checkpoint: embedded config is invalid: ") + e.what());
  }
}

std::shared_ptr<const lm::LanguageModel> restore_plm(const Checkpoint& c) {
  const ExperimentConfig cfg = checkpoint_config(c);
  core::RngStream init(0, "init/restore");
  auto plm = std::make_shared<lm::LanguageModel>(cfg.lm, init);
  load_into(c.plm, plm->parameters(), "plm");
  plm->freeze();
  require(plm->checksum() == c.plm_checksum, ErrorCode::kInvalidArtifact,
          "checkpoint: PLM checksum mismatch (stored " + hex64(c.plm_checksum) + ", computed " +
              hex64(plm->checksum()) + ")");
  return plm;
}

std::unique_ptr<prompt::PromptModel> restore_model(const Checkpoint& c) {
  require(c.kind == "model", ErrorCode::kInvalidArtifact, "checkpoint: expected a trained model checkpoint, got '" + c.kind + "'");
  const ExperimentConfig cfg = checkpoint_config(c);
  require(std::string(prompt::variant_name(cfg.model.method.variant)) == c.variant, ErrorCode::kInvalidArtifact,
          "checkpoint: variant does not match the embedded config");
  auto model = std::make_unique<prompt::PromptModel>(cfg.model, restore_plm(c), c.seed);
  load_into(c.tensors, model->state_parameters(), "model");
  if (auto* cb = model->codebook()) cb->set_state(cb->embeddings(), c.codebook_counts);
  return model;
}

}  // namespace vip::app
