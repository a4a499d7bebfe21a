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

#ifndef VIP_VIP_H_
#define VIP_VIP_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define VIP_API __attribute__((visibility("default")))
#else
#define VIP_API
#endif

/* Status codes double as CLI exit codes. */
typedef enum vip_status {
  VIP_OK = 0,
  VIP_ERR_USAGE = 1,              /* bad arguments or unknown split/command */
  VIP_ERR_CONFIG = 2,             /* malformed or invalid configuration */
  VIP_ERR_MISSING_ARTIFACT = 3,   /* input file does not exist or is unreadable */
  VIP_ERR_RUNTIME = 4,            /* training diverged or a run failed */
  VIP_ERR_INVALID_ARTIFACT = 5    /* checkpoint or dataset is corrupt or incompatible */
} vip_status;

typedef struct vip_config vip_config;
typedef struct vip_checkpoint vip_checkpoint;

/* Receives one progress line at a time; may be NULL. */
typedef void (*vip_log_fn)(const char* line, void* user);

VIP_API const char* vip_version(void);
VIP_API const char* vip_status_name(vip_status status);
/* Message of the last failed call on this thread; never NULL. */
VIP_API const char* vip_last_error(void);

VIP_API vip_status vip_config_load(const char* path, vip_config** out);
VIP_API vip_status vip_config_parse(const char* json_text, vip_config** out);
VIP_API vip_status vip_config_default(vip_config** out);
VIP_API void vip_config_free(vip_config* cfg);
VIP_API vip_status vip_config_set_seed(vip_config* cfg, uint64_t seed);
VIP_API vip_status vip_config_set_pretrain_seed(vip_config* cfg, uint64_t seed);
/* Resolved configuration as JSON; release with vip_string_free. */
VIP_API vip_status vip_config_to_json(const vip_config* cfg, char** out);
VIP_API void vip_string_free(char* s);

VIP_API vip_status vip_checkpoint_open(const char* path, vip_checkpoint** out);
VIP_API void vip_checkpoint_close(vip_checkpoint* ckpt);
/* "plm" or "model"; the string lives as long as the handle. */
VIP_API const char* vip_checkpoint_kind(const vip_checkpoint* ckpt);
/* Method variant of a model checkpoint, empty for a PLM checkpoint. */
VIP_API const char* vip_checkpoint_variant(const vip_checkpoint* ckpt);

VIP_API void vip_set_logger(vip_log_fn fn, void* user);

VIP_API vip_status vip_pretrain_plm(const vip_config* cfg, const char* out_dir);
VIP_API vip_status vip_train(const vip_config* cfg, const char* out_dir);
VIP_API vip_status vip_eval(const vip_checkpoint* ckpt, const char* split, const char* out_dir);
VIP_API vip_status vip_compare(const vip_config* cfg, const char* out_dir);
VIP_API vip_status vip_export_codebook(const vip_checkpoint* ckpt, const char* out_dir);
VIP_API vip_status vip_analyze_codebook(const vip_config* cfg, const vip_checkpoint* ckpt, const char* out_dir);
VIP_API vip_status vip_gen_data(const vip_config* cfg, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
