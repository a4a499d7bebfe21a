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

#include "vip/train/train.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "vip/core/error.hpp"

namespace vip::train {

using prompt::PromptModel;
using tasks::TextSample;

void TrainConfig::validate() const {
  require(prompt_lr > 0.0 && other_lr > 0.0, ErrorCode::kConfig, "train: learning rates must be positive");
  require(batch_size >= 1 && max_steps >= 1 && eval_interval >= 1, ErrorCode::kConfig,
          "train: batch_size, max_steps and eval_interval must be positive");
  require(patience >= 1, ErrorCode::kConfig, "train: patience must be >= 1");
  require(eval_limit >= 0, ErrorCode::kConfig, "train: eval_limit must be >= 0");
  require(probe_count >= 0 && probe_count != 1, ErrorCode::kConfig, "train: probe_count must be 0 or >= 2");
  require(!seeds.empty(), ErrorCode::kConfig, "train: seeds must not be empty");
}

std::vector<std::pair<std::string, double>> metric_values(const MetricsRecord& r) {
  std::vector<std::pair<std::string, double>> out;
  auto add = [&](const char* name, double v) {
    if (!std::isnan(v)) out.emplace_back(name, v);
  };
  add("accuracy", r.accuracy);
  add("ce", r.ce);
  add("commitment", r.commitment);
  add("nr", r.nr);
  add("total", r.total);
  add("perplexity", r.perplexity);
  add("pc_variance", r.pc_variance);
  return out;
}

TrainData single_task(const std::string& name, const tasks::DatasetSplit& split) {
  return TrainData{split.train, {name}, {split.dev}};
}

TrainData mixture_data(const tasks::Mixture& m) { return TrainData{m.train, m.names, m.dev}; }

Snapshot capture(PromptModel& model) {
  Snapshot s;
  for (const core::Parameter* p : model.state_parameters()) s.values.push_back(p->value);
  if (const auto* cb = model.codebook()) s.counts = cb->counts();
  return s;
}

void restore(PromptModel& model, const Snapshot& s) {
  auto params = model.state_parameters();
  require(params.size() == s.values.size(), ErrorCode::kRuntime, "restore: snapshot does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = s.values[i];
  if (auto* cb = model.codebook()) cb->set_state(cb->embeddings(), s.counts);
}

MetricsRecord evaluate(const PromptModel& model, std::span<const TextSample> samples, const std::string& split,
                       const std::string& task, std::uint64_t seed, int limit) {
  require(!samples.empty(), ErrorCode::kRuntime, "evaluate: split '" + split + "' of '" + task + "' is empty");
  const std::size_t n = limit > 0 ? std::min(samples.size(), static_cast<std::size_t>(limit)) : samples.size();
  core::RngStream sampling(seed, "sampling/eval/" + task + "/" + split);
  double hits = 0.0, ce = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = model.predict(samples[i], sampling, static_cast<int>(samples[i].target.size()) + 2);
    hits += lm::exact_match(p.decoded, samples[i].target) ? 1.0 : 0.0;
    ce += p.ce;
  }
  MetricsRecord r;
  r.split = split;
  r.task = task;
  r.accuracy = hits / static_cast<double>(n);
  r.ce = ce / static_cast<double>(n);
  return r;
}

double collapse_statistic(std::span<const core::Matrix> reps) {
  require(reps.size() >= 2, ErrorCode::kRuntime, "collapse_diagnostic: needs at least 2 probe inputs");
  const auto rows = reps[0].rows(), cols = reps[0].cols();
  // shifted by the first probe so identical inputs give exactly zero
  core::Matrix mu = core::Matrix::Zero(rows, cols);
  for (const auto& r : reps) {
    require(r.rows() == rows && r.cols() == cols, ErrorCode::kRuntime, "collapse_diagnostic: shape mismatch");
    mu += r - reps[0];
  }
  mu /= static_cast<double>(reps.size());
  double ss = 0.0;
  for (const auto& r : reps) ss += (r - reps[0] - mu).squaredNorm();
  return ss / static_cast<double>(reps.size() - 1) / static_cast<double>(rows);
}

double collapse_diagnostic(const PromptModel& model, std::span<const std::vector<int>> probes) {
  require(probes.size() >= 2, ErrorCode::kRuntime, "collapse_diagnostic: needs at least 2 probe inputs");
  bool distinct = false;
  for (const auto& p : probes) distinct = distinct || p != probes[0];
  require(distinct, ErrorCode::kRuntime, "collapse_diagnostic: probe inputs must not all be identical");
  std::vector<core::Matrix> reps;
  reps.reserve(probes.size());
  for (const auto& p : probes) reps.push_back(model.prompt_representation(p));
  return collapse_statistic(reps);
}

namespace {

std::string describe(const prompt::LossBreakdown& l) {
  std::ostringstream os;
  os << "ce=" << l.ce << " commitment=" << l.commitment << " nr=" << l.nr;
  return os.str();
}

bool has_prompt_rows(prompt::Variant v) { return v != prompt::Variant::kFT; }

}  // namespace

TrainResult train(PromptModel& model, const TrainData& data, const TrainConfig& cfg, std::uint64_t seed,
                  const Logger& log) {
  cfg.validate();
  require(!data.train.empty(), ErrorCode::kRuntime, "train: empty training split");
  require(!data.dev.empty() && data.dev.size() == data.tasks.size(), ErrorCode::kRuntime,
          "train: one dev split per task is required");
  for (const auto& d : data.dev) require(!d.empty(), ErrorCode::kRuntime, "train: dev split is empty");

  core::Optimizer opt(cfg.optimizer, {cfg.prompt_lr, cfg.other_lr}, model.trainable_parameters());
  core::RngStream order_rng(seed, "data/batches");
  prompt::Streams streams{core::RngStream(seed, "dropout"), core::RngStream(seed, "sampling/train")};

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  std::vector<std::vector<int>> probes;
  if (has_prompt_rows(model.variant()) && cfg.probe_count >= 2) {
    for (const auto& s : data.dev[0]) {
      if (static_cast<int>(probes.size()) >= cfg.probe_count) break;
      probes.emplace_back(s.content().begin(), s.content().end());
    }
  }

  TrainResult res;
  Snapshot best = capture(model);
  int bad_evals = 0;
  std::vector<vq::Assignment> window;
  double ce_acc = 0.0, commit_acc = 0.0, nr_acc = 0.0, total_acc = 0.0;
  int window_steps = 0;
  prompt::LossBreakdown last;

  for (int step = 1; step <= cfg.max_steps; ++step) {
    std::vector<const TextSample*> batch;
    while (static_cast<int>(batch.size()) < cfg.batch_size) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.uniform_index(i)]);
        cursor = 0;
      }
      batch.push_back(&data.train[order[cursor++]]);
    }
    core::Tape tape;
    tape.set_round_f32(cfg.f32);
    opt.zero_grad();
    prompt::LossBreakdown loss;
    try {
      loss = model.total_loss(tape, batch, true, streams);
      require(std::isfinite(loss.total.scalar()), ErrorCode::kRuntime, "non-finite loss");
      tape.backward(loss.total);
    } catch (const Error& e) {
      fail(ErrorCode::kRuntime, "train: aborted at step " + std::to_string(step) + " (" + e.what() +
                                    "); last finite components: " + describe(last));
    }
    opt.step();
    model.ema_update(loss);

    ce_acc += loss.ce;
    commit_acc += loss.commitment;
    nr_acc += loss.nr;
    total_acc += loss.total.scalar();
    ++window_steps;
    window.insert(window.end(), loss.assignments.begin(), loss.assignments.end());
    last = loss;
    res.steps_run = step;

    if (step % cfg.eval_interval != 0 && step != cfg.max_steps) continue;

    MetricsRecord tr;
    tr.step = step;
    tr.split = "train";
    tr.task = data.tasks.size() == 1 ? data.tasks[0] : "mixture";
    tr.ce = ce_acc / window_steps;
    tr.total = total_acc / window_steps;
    if (model.variant() == prompt::Variant::kVIP) {
      tr.commitment = commit_acc / window_steps;
      tr.perplexity = vq::usage_stats(window, model.codebook()->size()).perplexity;
    }
    if (model.config().method.noise_resilience) tr.nr = nr_acc / window_steps;
    res.history.push_back(tr);
    window.clear();
    ce_acc = commit_acc = nr_acc = total_acc = 0.0;
    window_steps = 0;

    double dev_sum = 0.0;
    for (std::size_t t = 0; t < data.tasks.size(); ++t) {
      MetricsRecord r = evaluate(model, data.dev[t], "dev", data.tasks[t], seed, cfg.eval_limit);
      r.step = step;
      if (t == 0 && probes.size() >= 2) r.pc_variance = collapse_diagnostic(model, probes);
      dev_sum += r.accuracy;
      res.history.push_back(r);
    }
    const double dev = dev_sum / static_cast<double>(data.tasks.size());
    if (data.tasks.size() > 1) {
      MetricsRecord m;
      m.step = step;
      m.split = "dev";
      m.task = "mean";
      m.accuracy = dev;
      res.history.push_back(m);
    }
    if (log) {
      std::ostringstream os;
      os << "step " << step << " train_ce " << tr.ce << " dev_acc " << dev;
      log(os.str());
    }
    if (dev > res.best_dev) {
      res.best_dev = dev;
      res.best_step = step;
      best = capture(model);
      bad_evals = 0;
    } else if (++bad_evals >= cfg.patience) {
      res.early_stopped = true;
      break;
    }
  }
  restore(model, best);
  res.streams = {order_rng, streams.dropout, streams.sampling};
  return res;
}

double mean(std::span<const double> v) {
  require(!v.empty(), ErrorCode::kRuntime, "mean: empty");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  require(v.size() >= 2, ErrorCode::kRuntime, "std: needs at least 2 values");
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

ComparisonSummary compare_methods(std::span<const CompareMethod> methods, std::span<const CompareTask> tasks,
                                  std::span<const std::uint64_t> seeds, const TrainConfig& cfg,
                                  std::shared_ptr<const lm::LanguageModel> plm, const Logger& log) {
  require(!methods.empty() && !tasks.empty() && !seeds.empty(), ErrorCode::kConfig,
          "compare: needs at least one method, task and seed");
  ComparisonSummary out;
  for (const auto& task : tasks) {
    for (const auto& method : methods) {
      ComparisonRow row;
      row.method = method.name;
      row.task = task.name;
      for (std::uint64_t seed : seeds) {
        PromptModel model(method.model, plm, seed);
        auto res = train(model, single_task(task.name, task.split), cfg, seed);
        const std::string tag = task.name + "/" + method.name + "/" + std::to_string(seed);
        for (auto r : res.history) {
          r.task = tag;
          out.history.push_back(r);
        }
        row.seeds.push_back(seed);
        row.test.push_back(evaluate(model, task.split.test, "test", task.name, seed).accuracy);
        row.ood.push_back(task.split.ood.empty() ? kNotApplicable
                                                 : evaluate(model, task.split.ood, "ood", task.name, seed).accuracy);
        if (log) {
          std::ostringstream os;
          os << tag << " best_step " << res.best_step << " dev " << res.best_dev << " test " << row.test.back()
             << " ood " << row.ood.back();
          log(os.str());
        }
      }
      row.test_mean = mean(row.test);
      row.ood_mean = mean(row.ood);
      if (seeds.size() >= 2) {
        row.test_std = sample_std(row.test);
        row.ood_std = sample_std(row.ood);
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace vip::train
