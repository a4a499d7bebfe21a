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

#include "vip/vip.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "vip/app/checkpoint.hpp"
#include "vip/app/commands.hpp"
#include "vip/app/config.hpp"
#include "vip/core/error.hpp"

struct vip_config {
  vip::app::ExperimentConfig cfg;
};

struct vip_checkpoint {
  vip::app::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;
vip_log_fn g_log = nullptr;
void* g_log_user = nullptr;

template <typename F>
vip_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return VIP_OK;
  } catch (const vip::Error& e) {
    g_last_error = e.what();
    return static_cast<vip_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return VIP_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VIP_ERR_RUNTIME;
  }
}

void need(const void* p, const char* what) {
  vip::require(p != nullptr, vip::ErrorCode::kUsage, std::string(what) + " must not be NULL");
}

vip::train::Logger logger() {
  if (!g_log) return nullptr;
  return [](const std::string& line) { g_log(line.c_str(), g_log_user); };
}

}  // namespace

extern "C" {

const char* vip_version(void) { return "0.1.0"; }

const char* vip_status_name(vip_status s) {
  switch (s) {
    case VIP_OK: return "ok";
    case VIP_ERR_USAGE: return "usage";
    case VIP_ERR_CONFIG: return "config";
    case VIP_ERR_MISSING_ARTIFACT: return "missing-artifact";
    case VIP_ERR_RUNTIME: return "runtime";
    case VIP_ERR_INVALID_ARTIFACT: return "invalid-artifact";
  }
  return "unknown";
}

const char* vip_last_error(void) { return g_last_error.c_str(); }

vip_status vip_config_load(const char* path, vip_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new vip_config{vip::app::load_config(path)};
  });
}

vip_status vip_config_parse(const char* json_text, vip_config** out) {
  return guard([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new vip_config{vip::app::parse_config(json_text)};
  });
}

vip_status vip_config_default(vip_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new vip_config{vip::app::parse_config("{}")};
  });
}

void vip_config_free(vip_config* cfg) { delete cfg; }

vip_status vip_config_set_seed(vip_config* cfg, uint64_t seed) {
  return guard([&] {
    need(cfg, "cfg");
    cfg->cfg.seed = seed;
  });
}

vip_status vip_config_set_pretrain_seed(vip_config* cfg, uint64_t seed) {
  return guard([&] {
    need(cfg, "cfg");
    cfg->cfg.pretrain_seed = seed;
  });
}

vip_status vip_config_to_json(const vip_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    const std::string s = vip::app::config_to_json(cfg->cfg).dump(2);
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void vip_string_free(char* s) { delete[] s; }

vip_status vip_checkpoint_open(const char* path, vip_checkpoint** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new vip_checkpoint{vip::app::load_checkpoint(path)};
  });
}

void vip_checkpoint_close(vip_checkpoint* ckpt) { delete ckpt; }

const char* vip_checkpoint_kind(const vip_checkpoint* ckpt) { return ckpt ? ckpt->ckpt.kind.c_str() : ""; }

const char* vip_checkpoint_variant(const vip_checkpoint* ckpt) { return ckpt ? ckpt->ckpt.variant.c_str() : ""; }

void vip_set_logger(vip_log_fn fn, void* user) {
  g_log = fn;
  g_log_user = user;
}

vip_status vip_pretrain_plm(const vip_config* cfg, const char* out_dir) {
  return guard([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    vip::app::cmd_pretrain(cfg->cfg, out_dir, logger());
  });
}

vip_status vip_train(const vip_config* cfg, const char* out_dir) {
  return guard([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    vip::app::cmd_train(cfg->cfg, out_dir, logger());
  });
}

vip_status vip_eval(const vip_checkpoint* ckpt, const char* split, const char* out_dir) {
  return guard([&] {
    need(ckpt, "ckpt");
    need(split, "split");
    need(out_dir, "out_dir");
    vip::app::cmd_eval(ckpt->ckpt, split, out_dir, logger());
  });
}

vip_status vip_compare(const vip_config* cfg, const char* out_dir) {
  return guard([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    vip::app::cmd_compare(cfg->cfg, out_dir, logger());
  });
}

vip_status vip_export_codebook(const vip_checkpoint* ckpt, const char* out_dir) {
  return guard([&] {
    need(ckpt, "ckpt");
    need(out_dir, "out_dir");
    vip::app::cmd_export_codebook(ckpt->ckpt, out_dir);
  });
}

vip_status vip_analyze_codebook(const vip_config* cfg, const vip_checkpoint* ckpt, const char* out_dir) {
  return guard([&] {
    need(cfg, "cfg");
    need(ckpt, "ckpt");
    need(out_dir, "out_dir");
    vip::app::cmd_analyze_codebook(cfg->cfg, ckpt->ckpt, out_dir);
  });
}

vip_status vip_gen_data(const vip_config* cfg, const char* out_dir) {
  return guard([&] {
    need(cfg, "cfg");
    need(out_dir, "out_dir");
    vip::app::cmd_gen_data(cfg->cfg, out_dir);
  });
}

}  // extern "C"
