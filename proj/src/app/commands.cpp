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

#include "vip/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vip/app/analysis.hpp"
#include "vip/app/io.hpp"
#include "vip/core/error.hpp"

namespace vip::app {

using nlohmann::json;

namespace {

void write_config(const ExperimentConfig& cfg, const std::string& out_dir) {
  atomic_write(join(out_dir, "config.json"), config_to_json(cfg).dump(2) + "\n");
}

double majority_accuracy(const tasks::DatasetSplit& s) {
  std::map<int, int> counts;
  for (const auto& x : s.train) ++counts[x.target[0]];
  int label = -1, best = -1;
  for (const auto& [id, c] : counts)
    if (c > best) {
      best = c;
      label = id;
    }
  if (s.test.empty()) return train::kNotApplicable;
  double hits = 0.0;
  for (const auto& x : s.test) hits += x.target[0] == label ? 1.0 : 0.0;
  return hits / static_cast<double>(s.test.size());
}

const std::vector<tasks::TextSample>& pick(const tasks::DatasetSplit& s, const std::string& split) {
  if (split == "train") return s.train;
  if (split == "dev") return s.dev;
  if (split == "test") return s.test;
  if (split == "ood") return s.ood;
  fail(ErrorCode::kUsage, "unknown split '" + split + "' (expected train, dev, test or ood)");
}

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string values_field(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace

std::shared_ptr<const lm::LanguageModel> obtain_plm(const ExperimentConfig& cfg, const train::Logger& log) {
  if (!cfg.plm_checkpoint.empty()) {
    const Checkpoint c = load_checkpoint(cfg.plm_checkpoint);
    const ExperimentConfig pc = checkpoint_config(c);
    require(pc.lm == cfg.lm, ErrorCode::kConfig,
            "plm checkpoint '" + cfg.plm_checkpoint + "' was built with a different lm config");
    return restore_plm(c);
  }
  if (log) log("pretraining the PLM in-process (set plm_checkpoint to reuse one)");
  auto plm = lm::pretrain(cfg.lm, cfg.pretrain, cfg.pretrain_seed);
  return std::make_shared<const lm::LanguageModel>(std::move(plm));
}

std::vector<tasks::DatasetSplit> build_splits(const ExperimentConfig& cfg) {
  std::vector<tasks::DatasetSplit> out;
  for (const auto& t : cfg.tasks) out.push_back(tasks::make_splits(t.spec, t.ood, cfg.sizes));
  return out;
}

void cmd_pretrain(const ExperimentConfig& cfg, const std::string& out_dir, const train::Logger& log) {
  ensure_dir(out_dir);
  lm::PretrainReport rep;
  auto on_step = [&](int step, double loss) {
    if (log && step % cfg.pretrain.eval_interval == 0) log("pretrain step " + std::to_string(step) + " loss " + format_double(loss));
  };
  const lm::LanguageModel plm = lm::pretrain(cfg.lm, cfg.pretrain, cfg.pretrain_seed, &rep, on_step);
  std::vector<train::MetricsRecord> rows;
  for (std::size_t i = 0; i < rep.loss_history.size(); ++i) {
    train::MetricsRecord r;
    r.step = static_cast<int>(i + 1);
    r.split = "train";
    r.task = "pretrain";
    r.ce = rep.loss_history[i];
    rows.push_back(r);
  }
  for (auto [task, em] : {std::pair{"copy", rep.copy_exact_match}, std::pair{"infill", rep.infill_exact_match}}) {
    train::MetricsRecord r;
    r.step = rep.steps_run;
    r.split = "heldout";
    r.task = task;
    r.accuracy = em;
    rows.push_back(r);
  }
  write_config(cfg, out_dir);
  atomic_write(join(out_dir, "metrics.csv"), metrics_csv(rows));
  atomic_write(join(out_dir, "plm.json"), serialize_checkpoint(make_plm_checkpoint(cfg, plm)));
  if (log)
    log("pretrained in " + std::to_string(rep.steps_run) + " steps: copy " + format_double(rep.copy_exact_match) +
        " infill " + format_double(rep.infill_exact_match));
}

void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir, const train::Logger& log) {
  ensure_dir(out_dir);
  auto plm = obtain_plm(cfg, log);
  const auto splits = build_splits(cfg);
  train::TrainData data;
  if (splits.size() == 1) {
    data = train::single_task(cfg.tasks[0].spec.name, splits[0]);
  } else {
    std::vector<tasks::TaskSpec> specs;
    for (const auto& t : cfg.tasks) specs.push_back(t.spec);
    const int cap = cfg.mixture_cap > 0 ? cfg.mixture_cap : cfg.sizes.train;
    data = train::mixture_data(tasks::multi_task_mixture(specs, splits, cap, cfg.data_seed));
  }
  prompt::PromptModel model(cfg.model, plm, cfg.seed);
  auto res = train::train(model, data, cfg.train, cfg.seed, log);
  auto history = res.history;
  for (std::size_t t = 0; t < splits.size(); ++t) {
    for (const char* split : {"test", "ood"}) {
      const auto& samples = pick(splits[t], split);
      if (samples.empty()) continue;
      auto r = train::evaluate(model, samples, split, cfg.tasks[t].spec.name, cfg.seed);
      r.step = res.best_step;
      history.push_back(r);
      if (log) log(std::string(split) + " " + cfg.tasks[t].spec.name + " accuracy " + format_double(r.accuracy));
    }
  }
  write_config(cfg, out_dir);
  atomic_write(join(out_dir, "metrics.csv"), metrics_csv(history));
  atomic_write(join(out_dir, "checkpoint.json"), serialize_checkpoint(make_model_checkpoint(cfg, model, &res)));
}

void cmd_eval(const Checkpoint& ckpt, const std::string& split, const std::string& out_dir, const train::Logger& log) {
  const ExperimentConfig cfg = checkpoint_config(ckpt);
  auto model = restore_model(ckpt);
  const auto splits = build_splits(cfg);
  std::vector<train::MetricsRecord> rows;
  for (std::size_t t = 0; t < splits.size(); ++t) {
    const auto& samples = pick(splits[t], split);
    require(!samples.empty(), ErrorCode::kConfig, "eval: split '" + split + "' is empty");
    auto r = train::evaluate(*model, samples, split, cfg.tasks[t].spec.name, cfg.seed);
    r.step = ckpt.train.value("best_step", 0);
    rows.push_back(r);
    if (log) log(split + " " + r.task + " accuracy " + format_double(r.accuracy));
  }
  ensure_dir(out_dir);
  write_config(cfg, out_dir);
  atomic_write(join(out_dir, "eval_metrics.csv"), metrics_csv(rows));
}

std::string summary_csv(const train::ComparisonSummary& s, const std::vector<double>& majority) {
  std::string out = "method,task,seeds,test_mean,test_std,ood_mean,ood_std,majority,test_values,ood_values\n";
  std::vector<std::string> task_order;
  for (const auto& r : s.rows)
    if (std::find(task_order.begin(), task_order.end(), r.task) == task_order.end()) task_order.push_back(r.task);
  for (const auto& r : s.rows) {
    const auto t = static_cast<std::size_t>(std::find(task_order.begin(), task_order.end(), r.task) - task_order.begin());
    const double maj = t < majority.size() ? majority[t] : train::kNotApplicable;
    out += r.method + "," + r.task + "," + std::to_string(r.seeds.size()) + "," + format_double(r.test_mean) + "," +
           opt_field(r.test_std) + "," + format_double(r.ood_mean) + "," + opt_field(r.ood_std) + "," +
           (std::isnan(maj) ? "" : format_double(maj)) + "," + values_field(r.test) + "," + values_field(r.ood) + "\n";
  }
  return out;
}

void cmd_compare(const ExperimentConfig& cfg, const std::string& out_dir, const train::Logger& log) {
  ensure_dir(out_dir);
  auto plm = obtain_plm(cfg, log);
  const auto splits = build_splits(cfg);
  std::vector<train::CompareTask> tasks;
  std::vector<double> majority;
  for (std::size_t t = 0; t < splits.size(); ++t) {
    tasks.push_back({cfg.tasks[t].spec.name, splits[t]});
    majority.push_back(majority_accuracy(splits[t]));
  }
  std::vector<train::CompareMethod> methods;
  for (const auto& m : cfg.compare_methods) methods.push_back({m, method_config(cfg, m)});
  auto summary = train::compare_methods(methods, tasks, cfg.train.seeds, cfg.train, plm, log);
  write_config(cfg, out_dir);
  atomic_write(join(out_dir, "metrics.csv"), metrics_csv(summary.history));
  atomic_write(join(out_dir, "summary.csv"), summary_csv(summary, majority));
}

void cmd_export_codebook(const Checkpoint& ckpt, const std::string& out_dir) {
  require(ckpt.kind == "model" && ckpt.variant == "VIP", ErrorCode::kInvalidArtifact,
          "export-codebook: needs a VIP checkpoint (got " + (ckpt.variant.empty() ? ckpt.kind : ckpt.variant) + ")");
  auto model = restore_model(ckpt);
  ensure_dir(out_dir);
  atomic_write(join(out_dir, "codebook.json"), export_codebook(*model->codebook(), ckpt.config).dump() + "\n");
}

void cmd_analyze_codebook(const ExperimentConfig& cfg, const Checkpoint& ckpt, const std::string& out_dir) {
  require(ckpt.kind == "model" && ckpt.variant == "VIP", ErrorCode::kInvalidArtifact,
          "analyze-codebook: needs a VIP checkpoint");
  auto model = restore_model(ckpt);
  const auto splits = build_splits(cfg);
  json reports = json::array();
  for (std::size_t t = 0; t < splits.size(); ++t) {
    auto report = analyze_codebook(*model, splits[t].dev, cfg.seed);
    json j = report_to_json(report);
    j["task"] = cfg.tasks[t].spec.name;
    reports.push_back(j);
  }
  ensure_dir(out_dir);
  write_config(cfg, out_dir);
  atomic_write(join(out_dir, "codebook_report.json"), json{{"tasks", reports}}.dump(2) + "\n");
}

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const auto splits = build_splits(cfg);
  const lm::Vocab vocab(cfg.lm.vocab_size);
  write_config(cfg, out_dir);
  for (std::size_t t = 0; t < splits.size(); ++t) {
    const auto& spec = cfg.tasks[t].spec;
    for (const char* split : {"train", "dev", "test", "ood"}) {
      const auto& samples = pick(splits[t], split);
      json header{{"format", "viplab-dataset"},
                  {"version", 1},
                  {"task", spec.name},
                  {"family", std::string(tasks::family_name(spec.family))},
                  {"split", split},
                  {"count", samples.size()},
                  {"hard_prompt_length", 1 + static_cast<int>(spec.labels.size())},
                  {"seed", spec.seed},
                  {"descriptor", vocab.symbol(spec.descriptor)},
                  {"ood_shift", std::string(tasks::shift_name(cfg.tasks[t].ood.kind))}};
      atomic_write(join(out_dir, spec.name + "." + split + ".tsv"), dump_dataset(header, samples));
    }
  }
}

}  // namespace vip::app
