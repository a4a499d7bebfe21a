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

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vip/vip.h"

namespace {

int report(vip_status s) {
  if (s == VIP_OK) return 0;
  std::string msg = vip_last_error();
  for (char& c : msg)
    if (c == '\n' || c == '\r') c = ' ';
  std::string quoted;
  for (char c : msg) {
    if (c == '"' || c == '\\') quoted += '\\';
    quoted += c;
  }
  std::fprintf(stderr, "error code=%d kind=%s message=\"%s\"\n", static_cast<int>(s), vip_status_name(s),
               quoted.c_str());
  return static_cast<int>(s);
}

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

struct ConfigHandle {
  vip_config* cfg = nullptr;
  ~ConfigHandle() { vip_config_free(cfg); }
};

struct CheckpointHandle {
  vip_checkpoint* ckpt = nullptr;
  ~CheckpointHandle() { vip_checkpoint_close(ckpt); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viplab: vector-quantized input-contextualized prompt tuning lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vip_version());

  std::string config, out, checkpoint, split = "test";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress lines on stderr");

  auto add_config = [&](CLI::App* c) { c->add_option("--config", config, "Experiment config JSON")->required(); };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", out, "Output directory")->required(); };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "Override the run seed"); };
  auto add_ckpt = [&](CLI::App* c) { c->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required(); };

  auto* pretrain = app.add_subcommand("pretrain-plm", "Pretrain and freeze the tiny encoder-decoder");
  add_config(pretrain), add_out(pretrain), add_seed(pretrain);
  auto* train = app.add_subcommand("train", "Train one prompt method");
  add_config(train), add_out(train), add_seed(train);
  auto* eval = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  add_ckpt(eval), add_out(eval);
  eval->add_option("--split", split, "train, dev, test or ood")->check(CLI::IsMember({"train", "dev", "test", "ood"}));
  auto* compare = app.add_subcommand("compare", "Train every method x task x seed and summarize");
  add_config(compare), add_out(compare), add_seed(compare);
  auto* exp = app.add_subcommand("export-codebook", "Write the codebook of a VIP checkpoint");
  add_ckpt(exp), add_out(exp);
  auto* analyze = app.add_subcommand("analyze-codebook", "Label dedication and PCA of codebook vectors");
  add_config(analyze), add_ckpt(analyze), add_out(analyze), add_seed(analyze);
  auto* gen = app.add_subcommand("gen-data", "Dump the synthetic task splits");
  add_config(gen), add_out(gen), add_seed(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '"' || c == '\n') c = '\'';
    std::fprintf(stderr, "error code=1 kind=usage message=\"%s\"\n", msg.c_str());
    return 1;
  }
  if (!quiet) vip_set_logger(log_line, nullptr);

  ConfigHandle cfg;
  CheckpointHandle ck;
  auto* cmd = app.get_subcommands().front();
  if (cmd != eval && cmd != exp) {
    if (int rc = report(vip_config_load(config.c_str(), &cfg.cfg))) return rc;
    if (seed) {
      const vip_status s = cmd == pretrain ? vip_config_set_pretrain_seed(cfg.cfg, *seed)
                                           : vip_config_set_seed(cfg.cfg, *seed);
      if (int rc = report(s)) return rc;
    }
  }
  if (cmd == eval || cmd == exp || cmd == analyze) {
    if (int rc = report(vip_checkpoint_open(checkpoint.c_str(), &ck.ckpt))) return rc;
  }

  if (cmd == pretrain) return report(vip_pretrain_plm(cfg.cfg, out.c_str()));
  if (cmd == train) return report(vip_train(cfg.cfg, out.c_str()));
  if (cmd == eval) return report(vip_eval(ck.ckpt, split.c_str(), out.c_str()));
  if (cmd == compare) return report(vip_compare(cfg.cfg, out.c_str()));
  if (cmd == exp) return report(vip_export_codebook(ck.ckpt, out.c_str()));
  if (cmd == analyze) return report(vip_analyze_codebook(cfg.cfg, ck.ckpt, out.c_str()));
  return report(vip_gen_data(cfg.cfg, out.c_str()));
}
