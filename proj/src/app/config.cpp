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

#include "vip/app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "vip/core/error.hpp"

namespace vip::app {

namespace {

// Reads an object, remembering which keys were consumed so leftovers can be
// reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j_.is_object(), ErrorCode::kConfig, "config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::kConfig, "config: '" + where(key) + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      require(seen_.count(it.key()) != 0, ErrorCode::kConfig, "config: unknown key '" + where(it.key().c_str()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string token_name(const lm::Vocab& v, int id) { return v.symbol(id); }

int content_token(const lm::Vocab& v, const std::string& s, const std::string& where) {
  require(v.contains(s), ErrorCode::kConfig, "config: '" + where + "' has unknown symbol '" + s + "'");
  return v.id(s);
}

std::vector<int> content_tokens(const lm::Vocab& v, const std::vector<std::string>& ss, const std::string& where) {
  std::vector<int> out;
  for (const auto& s : ss) out.push_back(content_token(v, s, where));
  return out;
}

std::vector<std::string> names(const lm::Vocab& v, const std::vector<int>& ids) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(token_name(v, id));
  return out;
}

std::string label_name(const lm::Vocab& v, int id) {
  std::string s = v.symbol(id);
  return s.substr(1, s.size() - 2);
}

json shift_to_json(const lm::Vocab& v, const tasks::DomainShift& s) {
  json j{{"kind", std::string(tasks::shift_name(s.kind))}};
  if (s.kind == tasks::ShiftKind::kSymbolPermutation) j["targets"] = names(v, s.targets);
  if (s.kind == tasks::ShiftKind::kLengthShift) {
    j["min_len"] = s.min_len;
    j["max_len"] = s.max_len;
  }
  if (s.kind == tasks::ShiftKind::kFrequencySkew) j["skew"] = s.skew;
  return j;
}

tasks::DomainShift shift_from_json(const lm::Vocab& v, const json& j, const std::string& path) {
  Reader r(j, path);
  tasks::DomainShift s;
  std::string kind = "identity";
  std::vector<std::string> targets;
  r.get("kind", kind);
  r.get("targets", targets);
  r.get("min_len", s.min_len);
  r.get("max_len", s.max_len);
  r.get("skew", s.skew);
  r.finish();
  s.kind = tasks::parse_shift(kind);
  s.targets = content_tokens(v, targets, path + ".targets");
  return s;
}

json task_to_json(const lm::Vocab& v, const TaskEntry& t) {
  const auto& s = t.spec;
  std::vector<std::string> labels;
  for (int l : s.labels) labels.push_back(label_name(v, l));
  return json{{"name", s.name},
              {"family", std::string(tasks::family_name(s.family))},
              {"descriptor", token_name(v, s.descriptor)},
              {"filler", names(v, s.filler)},
              {"semantic", names(v, s.semantic)},
              {"labels", labels},
              {"min_len", s.min_len},
              {"max_len", s.max_len},
              {"max_count", s.max_count},
              {"skew", s.skew},
              {"ood", shift_to_json(v, t.ood)}};
}

TaskEntry task_from_json(const lm::Vocab& v, const json& j, const std::string& path, std::uint64_t data_seed) {
  const auto suite = tasks::default_suite(v, data_seed);
  if (j.is_string()) {
    for (const auto& e : suite)
      if (e.spec.name == j.get<std::string>()) return TaskEntry{e.spec, e.ood};
    fail(ErrorCode::kConfig, "config: '" + path + "' names unknown suite task '" + j.get<std::string>() + "'");
  }
  Reader r(j, path);
  std::string name, family, descriptor;
  r.get("name", name);
  r.get("family", family);
  require(!name.empty() && !family.empty(), ErrorCode::kConfig, "config: '" + path + "' needs name and family");
  TaskEntry t;
  t.spec.name = name;
  t.spec.family = tasks::parse_family(family);
  t.spec.seed = data_seed;
  // Start from the suite task of the same family so only deviations need
  // spelling out.
  for (const auto& e : suite)
    if (e.spec.family == t.spec.family) {
      t.spec = e.spec;
      t.ood = e.ood;
      t.spec.name = name;
    }
  std::vector<std::string> filler = names(v, t.spec.filler), semantic = names(v, t.spec.semantic), labels;
  for (int l : t.spec.labels) labels.push_back(label_name(v, l));
  descriptor = token_name(v, t.spec.descriptor);
  r.get("descriptor", descriptor);
  r.get("filler", filler);
  r.get("semantic", semantic);
  r.get("labels", labels);
  r.get("min_len", t.spec.min_len);
  r.get("max_len", t.spec.max_len);
  r.get("max_count", t.spec.max_count);
  r.get("skew", t.spec.skew);
  if (const json* ood = r.child("ood")) t.ood = shift_from_json(v, *ood, path + ".ood");
  r.finish();
  require(v.contains(descriptor), ErrorCode::kConfig, "config: '" + path + ".descriptor' is not a token");
  t.spec.descriptor = v.id(descriptor);
  t.spec.filler = content_tokens(v, filler, path + ".filler");
  t.spec.semantic = content_tokens(v, semantic, path + ".semantic");
  t.spec.labels.clear();
  for (const auto& l : labels) t.spec.labels.push_back(v.label_id(l));
  t.spec.validate(v);
  return t;
}

core::OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return core::OptimizerKind::kSgd;
  if (s == "adam") return core::OptimizerKind::kAdam;
  fail(ErrorCode::kConfig, "config: train.optimizer must be 'sgd' or 'adam'");
}

}  // namespace

void ExperimentConfig::validate() const {
  lm.validate();
  model.resolved(lm.d_model).validate();
  train.validate();
  require(!tasks.empty(), ErrorCode::kConfig, "config: no tasks");
  require(sizes.train >= 1 && sizes.dev >= 1, ErrorCode::kConfig, "config: data.train and data.dev must be >= 1");
  require(sizes.test >= 0 && sizes.ood >= 0, ErrorCode::kConfig, "config: data sizes must be >= 0");
  require(mixture_cap >= 0, ErrorCode::kConfig, "config: data.mixture_cap must be >= 0");
  const lm::Vocab vocab(lm.vocab_size);
  std::set<std::string> seen;
  for (const auto& t : tasks) {
    t.spec.validate(vocab);
    tasks::make_ood(t.spec, t.ood);
    require(seen.insert(t.spec.name).second, ErrorCode::kConfig, "config: duplicate task name '" + t.spec.name + "'");
    const int hard = 1 + static_cast<int>(t.spec.labels.size());
    const int longest = std::max(t.spec.max_len, t.ood.max_len);
    require(hard + model.method.prompt_length + longest <= lm.max_seq_len, ErrorCode::kConfig,
            "config: task '" + t.spec.name + "' sequences exceed lm.max_seq_len");
  }
  // Each pair of tasks must be told apart by the descriptor.
  std::set<int> descriptors;
  for (const auto& t : tasks)
    require(descriptors.insert(t.spec.descriptor).second, ErrorCode::kConfig,
            "config: tasks must use distinct descriptor tokens");
  require(!compare_methods.empty(), ErrorCode::kConfig, "config: compare.methods must not be empty");
  for (const auto& m : compare_methods) prompt::parse_variant(m);
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  root.get("seed", c.seed);
  root.get("plm_checkpoint", c.plm_checkpoint);
  if (const json* l = root.child("lm")) {
    Reader r(*l, "lm");
    r.get("d_model", c.lm.d_model);
    r.get("encoder_layers", c.lm.encoder_layers);
    r.get("decoder_layers", c.lm.decoder_layers);
    r.get("heads", c.lm.heads);
    r.get("ffn_dim", c.lm.ffn_dim);
    r.get("vocab_size", c.lm.vocab_size);
    r.get("max_seq_len", c.lm.max_seq_len);
    r.finish();
  }
  if (const json* p = root.child("pretrain")) {
    Reader r(*p, "pretrain");
    auto& q = c.pretrain;
    r.get("seed", c.pretrain_seed);
    r.get("steps", q.steps);
    r.get("batch_size", q.batch_size);
    r.get("learning_rate", q.learning_rate);
    r.get("warmup_steps", q.warmup_steps);
    r.get("final_lr_fraction", q.final_lr_fraction);
    r.get("clip_norm", q.clip_norm);
    r.get("eval_interval", q.eval_interval);
    r.get("eval_samples", q.eval_samples);
    r.get("target_exact_match", q.target_exact_match);
    if (const json* cj = r.child("corpus")) {
      Reader rc(*cj, "pretrain.corpus");
      rc.get("min_len", q.corpus.min_len);
      rc.get("max_len", q.corpus.max_len);
      rc.get("max_spans", q.corpus.max_spans);
      rc.get("max_span_len", q.corpus.max_span_len);
      rc.get("copy_fraction", q.corpus.copy_fraction);
      rc.finish();
    }
    r.finish();
  }
  if (const json* m = root.child("method")) {
    Reader r(*m, "method");
    auto& q = c.model.method;
    std::string variant(prompt::variant_name(q.variant));
    r.get("variant", variant);
    q.variant = prompt::parse_variant(variant);
    r.get("prompt_length", q.prompt_length);
    r.get("static_tokens", q.static_tokens);
    r.get("noise_resilience", q.noise_resilience);
    r.get("dedicated_codebook", q.dedicated_codebook);
    r.get("vipc_skip", q.vipc_skip);
    r.get("idp_hidden", q.idp_hidden);
    r.finish();
  }
  if (const json* x = root.child("contextualizer")) {
    Reader r(*x, "contextualizer");
    auto& q = c.model.contextualizer;
    r.get("d_low", q.d_low);
    r.get("layers", q.layers);
    r.get("heads", q.heads);
    r.get("ffn_dim", q.ffn_dim);
    r.get("dropout", q.dropout);
    r.get("use_dropout", q.use_dropout);
    r.get("output_init_scale", q.output_init_scale);
    r.finish();
  }
  if (const json* x = root.child("quantizer")) {
    Reader r(*x, "quantizer");
    auto& q = c.model.quantizer;
    r.get("codebook_size", q.codebook_size);
    r.get("samples", q.samples);
    if (const json* t = r.child("temperature"); t && !t->is_null()) {
      require(t->is_number(), ErrorCode::kConfig, "config: 'quantizer.temperature' must be a number or null");
      q.temperature = t->get<double>();
    }
    r.get("commitment_cost", q.commitment_cost);
    r.get("decay", q.decay);
    r.get("shrink_unused", q.shrink_unused);
    r.finish();
  }
  const lm::Vocab vocab(c.lm.vocab_size);
  if (const json* d = root.child("data")) {
    Reader r(*d, "data");
    r.get("seed", c.data_seed);
    r.get("train", c.sizes.train);
    r.get("dev", c.sizes.dev);
    r.get("test", c.sizes.test);
    r.get("ood", c.sizes.ood);
    r.get("mixture_cap", c.mixture_cap);
    if (const json* ts = r.child("tasks")) {
      require(ts->is_array(), ErrorCode::kConfig, "config: 'data.tasks' must be an array");
      for (std::size_t i = 0; i < ts->size(); ++i)
        c.tasks.push_back(task_from_json(vocab, (*ts)[i], "data.tasks[" + std::to_string(i) + "]", c.data_seed));
    }
    r.finish();
  }
  if (c.tasks.empty())
    for (const auto& e : tasks::default_suite(vocab, c.data_seed)) c.tasks.push_back({e.spec, e.ood});
  for (auto& t : c.tasks) t.spec.seed = c.data_seed;
  if (const json* t = root.child("train")) {
    Reader r(*t, "train");
    auto& q = c.train;
    std::string opt = q.optimizer == core::OptimizerKind::kSgd ? "sgd" : "adam";
    std::string precision = q.f32 ? "f32" : "f64";
    r.get("prompt_lr", q.prompt_lr);
    r.get("other_lr", q.other_lr);
    r.get("optimizer", opt);
    r.get("batch_size", q.batch_size);
    r.get("max_steps", q.max_steps);
    r.get("eval_interval", q.eval_interval);
    r.get("patience", q.patience);
    r.get("eval_limit", q.eval_limit);
    r.get("probe_count", q.probe_count);
    r.get("precision", precision);
    r.get("seeds", q.seeds);
    r.finish();
    q.optimizer = parse_optimizer(opt);
    require(precision == "f32" || precision == "f64", ErrorCode::kConfig, "config: train.precision must be f32 or f64");
    q.f32 = precision == "f32";
  }
  if (const json* m = root.child("compare")) {
    Reader r(*m, "compare");
    r.get("methods", c.compare_methods);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config: malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingArtifact, "config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json config_to_json(const ExperimentConfig& c) {
  const lm::Vocab vocab(c.lm.vocab_size);
  const auto& p = c.pretrain;
  const auto& m = c.model.method;
  const auto& x = c.model.contextualizer;
  const auto& q = c.model.quantizer;
  const auto& t = c.train;
  json tasks_j = json::array();
  for (const auto& e : c.tasks) tasks_j.push_back(task_to_json(vocab, e));
  return json{
      {"seed", c.seed},
      {"plm_checkpoint", c.plm_checkpoint},
      {"lm",
       {{"d_model", c.lm.d_model},
        {"encoder_layers", c.lm.encoder_layers},
        {"decoder_layers", c.lm.decoder_layers},
        {"heads", c.lm.heads},
        {"ffn_dim", c.lm.ffn_dim},
        {"vocab_size", c.lm.vocab_size},
        {"max_seq_len", c.lm.max_seq_len}}},
      {"pretrain",
       {{"seed", c.pretrain_seed},
        {"steps", p.steps},
        {"batch_size", p.batch_size},
        {"learning_rate", p.learning_rate},
        {"warmup_steps", p.warmup_steps},
        {"final_lr_fraction", p.final_lr_fraction},
        {"clip_norm", p.clip_norm},
        {"eval_interval", p.eval_interval},
        {"eval_samples", p.eval_samples},
        {"target_exact_match", p.target_exact_match},
        {"corpus",
         {{"min_len", p.corpus.min_len},
          {"max_len", p.corpus.max_len},
          {"max_spans", p.corpus.max_spans},
          {"max_span_len", p.corpus.max_span_len},
          {"copy_fraction", p.corpus.copy_fraction}}}}},
      {"method",
       {{"variant", std::string(prompt::variant_name(m.variant))},
        {"prompt_length", m.prompt_length},
        {"static_tokens", m.static_tokens},
        {"noise_resilience", m.noise_resilience},
        {"dedicated_codebook", m.dedicated_codebook},
        {"vipc_skip", m.vipc_skip},
        {"idp_hidden", m.idp_hidden}}},
      {"contextualizer",
       {{"d_low", x.d_low},
        {"layers", x.layers},
        {"heads", x.heads},
        {"ffn_dim", x.ffn_dim},
        {"dropout", x.dropout},
        {"use_dropout", x.use_dropout},
        {"output_init_scale", x.output_init_scale}}},
      {"quantizer",
       {{"codebook_size", q.codebook_size},
        {"samples", q.samples},
        {"temperature", q.temperature ? json(*q.temperature) : json(nullptr)},
        {"commitment_cost", q.commitment_cost},
        {"decay", q.decay},
        {"shrink_unused", q.shrink_unused}}},
      {"data",
       {{"seed", c.data_seed},
        {"train", c.sizes.train},
        {"dev", c.sizes.dev},
        {"test", c.sizes.test},
        {"ood", c.sizes.ood},
        {"mixture_cap", c.mixture_cap},
        {"tasks", tasks_j}}},
      {"train",
       {{"prompt_lr", t.prompt_lr},
        {"other_lr", t.other_lr},
        {"optimizer", t.optimizer == core::OptimizerKind::kSgd ? "sgd" : "adam"},
        {"batch_size", t.batch_size},
        {"max_steps", t.max_steps},
        {"eval_interval", t.eval_interval},
        {"patience", t.patience},
        {"eval_limit", t.eval_limit},
        {"probe_count", t.probe_count},
        {"precision", t.f32 ? "f32" : "f64"},
        {"seeds", t.seeds}}},
      {"compare", {{"methods", c.compare_methods}}},
  };
}

prompt::ModelConfig method_config(const ExperimentConfig& cfg, const std::string& method) {
  prompt::ModelConfig m = cfg.model;
  const prompt::Variant v = prompt::parse_variant(method);
  if (v != m.method.variant) {
    m.method.variant = v;
    if (v != prompt::Variant::kVIP) {
      m.method.static_tokens = 0;
      m.method.dedicated_codebook = false;
    }
    if (v != prompt::Variant::kVIP && v != prompt::Variant::kVIPC) m.method.noise_resilience = false;
    if (v != prompt::Variant::kVIPC) m.method.vipc_skip = false;
    if (v != prompt::Variant::kVIPIDP) m.method.idp_hidden = 0;
  }
  return m;
}

}  // namespace vip::app
