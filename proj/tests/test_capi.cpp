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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "vip/vip.h"

namespace {

namespace fs = std::filesystem;

std::string take(char* s) {
  std::string out = s ? s : "";
  vip_string_free(s);
  return out;
}

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STREQ(vip_status_name(VIP_OK), "ok");
  EXPECT_NE(std::string(vip_status_name(VIP_ERR_MISSING_ARTIFACT)), "ok");
  EXPECT_FALSE(std::string(vip_version()).empty());
}

TEST(CApi, ConfigParseErrorsCarryMessages) {
  vip_config* cfg = nullptr;
  EXPECT_EQ(vip_config_parse("{\"bogus\": 1}", &cfg), VIP_ERR_CONFIG);
  EXPECT_EQ(cfg, nullptr);
  EXPECT_NE(std::string(vip_last_error()).find("bogus"), std::string::npos);
  EXPECT_EQ(vip_config_load("/nonexistent/c.json", &cfg), VIP_ERR_MISSING_ARTIFACT);
  EXPECT_EQ(vip_config_parse(nullptr, &cfg), VIP_ERR_USAGE);
}

TEST(CApi, ConfigJsonRoundTrip) {
  vip_config* a = nullptr;
  ASSERT_EQ(vip_config_default(&a), VIP_OK);
  ASSERT_EQ(vip_config_set_seed(a, 42), VIP_OK);
  char* text = nullptr;
  ASSERT_EQ(vip_config_to_json(a, &text), VIP_OK);
  const std::string first = take(text);
  EXPECT_NE(first.find("42"), std::string::npos);
  vip_config* b = nullptr;
  ASSERT_EQ(vip_config_parse(first.c_str(), &b), VIP_OK);
  ASSERT_EQ(vip_config_to_json(b, &text), VIP_OK);
  EXPECT_EQ(take(text), first);
  vip_config_free(a);
  vip_config_free(b);
}

TEST(CApi, MissingCheckpoint) {
  vip_checkpoint* ck = nullptr;
  EXPECT_EQ(vip_checkpoint_open("/nonexistent/ck.json", &ck), VIP_ERR_MISSING_ARTIFACT);
  EXPECT_EQ(ck, nullptr);
  EXPECT_STREQ(vip_checkpoint_kind(nullptr), "");
}

TEST(CApi, CorruptCheckpoint) {
  const fs::path p = fs::temp_directory_path() / "viplab_capi_bad.json";
  std::FILE* f = std::fopen(p.c_str(), "w");
  std::fputs("{\"format\": \"something-else\"}", f);
  std::fclose(f);
  vip_checkpoint* ck = nullptr;
  EXPECT_EQ(vip_checkpoint_open(p.c_str(), &ck), VIP_ERR_INVALID_ARTIFACT);
  fs::remove(p);
}

TEST(CApi, GenDataAndLogger) {
  vip_config* cfg = nullptr;
  ASSERT_EQ(vip_config_parse(R"({"data": {"train": 8, "dev": 4, "test": 4, "ood": 4, "tasks": ["parity"]}})", &cfg),
            VIP_OK);
  const fs::path dir = fs::temp_directory_path() / "viplab_capi_gen";
  fs::remove_all(dir);
  std::vector<std::string> lines;
  vip_set_logger([](const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); },
                 &lines);
  ASSERT_EQ(vip_gen_data(cfg, dir.c_str()), VIP_OK) << vip_last_error();
  vip_set_logger(nullptr, nullptr);
  EXPECT_TRUE(fs::exists(dir / "parity.ood.tsv"));
  EXPECT_EQ(vip_gen_data(nullptr, dir.c_str()), VIP_ERR_USAGE);
  vip_config_free(cfg);
  fs::remove_all(dir);
}

}  // namespace
