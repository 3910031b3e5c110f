// Copyright 2026 The CMO Authors.
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

#include <map>
#include <optional>

#include "json.hpp"

#include "cmo/config.hpp"
#include "cmo/error.hpp"
#include "fixture_repo.hpp"

using namespace cmo;
using cmo::testing::TempDir;
using cmo::testing::write_file;
using json = nlohmann::json;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

std::optional<ErrorCode> code_of(const std::string& text) {
  CmoConfig cfg;
  try {
    apply_config_json(cfg, text);
    cfg.validate();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(Config, DefaultSnapshot) {
  auto cfg = load_config(std::nullopt, env_of({}));
  EXPECT_DOUBLE_EQ(cfg.optimizer.p, 0.05);
  EXPECT_EQ(cfg.optimizer.step_limit, 50);
  EXPECT_DOUBLE_EQ(cfg.optimizer.escalation_temperature, 1.0);
  EXPECT_DOUBLE_EQ(cfg.optimizer.base_temperature, 0.0);
  EXPECT_EQ(cfg.retrieval.k, 10);
  EXPECT_NO_THROW(cfg.validate());

  auto j = json::parse(cfg.to_json());
  EXPECT_DOUBLE_EQ(j["optimizer"]["p"].get<double>(), 0.05);
  EXPECT_EQ(j["optimizer"]["step_limit"].get<int>(), 50);
  EXPECT_DOUBLE_EQ(j["optimizer"]["escalation_temperature"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["optimizer"]["base_temperature"].get<double>(), 0.0);
  EXPECT_EQ(j["retrieval"]["k"].get<int>(), 10);
  EXPECT_EQ(j["optimizer"]["injectable_kinds"].size(), 7u);
  EXPECT_FALSE(j["evaluator"]["weights"]["conciseness"]["use_sim"].get<bool>());
  EXPECT_TRUE(j["evaluator"]["weights"]["rationality"]["use_sim"].get<bool>());
}

TEST(Config, FileSectionsApply) {
  TempDir dir;
  auto path = dir.path() / "cmo.json";
  write_file(path, R"({
    "evaluator": {"weights": {"conciseness": {"sim_coeff": 0.2, "llm_coeff": 0.8, "use_sim": true}},
                  "scorer_models": {"rationality": "judge-a"}, "diff_token_budget": 1000},
    "retrieval": {"k": 3, "corpus": "/data/corpus.bin"},
    "optimizer": {"p": 0.1, "step_limit": 20, "injectable_kinds": ["calleeknowledge", "VariableDataType"]},
    "context": {"summaries": false, "commit_types": ["fix", "feat"]},
    "backends": {"llm": {"kind": "mock", "mock_script": "s.json", "model": "m1"}},
    "paths": {"trace": "t.jsonl"}
  })");
  auto cfg = load_config(path, env_of({}));
  EXPECT_DOUBLE_EQ(cfg.weights[Metric::kConciseness].sim_coeff, 0.2);
  EXPECT_TRUE(cfg.weights[Metric::kConciseness].use_sim);
  EXPECT_EQ(cfg.scorer_models[0], "judge-a");
  EXPECT_EQ(cfg.diff_token_budget, 1000);
  EXPECT_EQ(cfg.retrieval.k, 3);
  EXPECT_EQ(cfg.corpus_path, "/data/corpus.bin");
  EXPECT_DOUBLE_EQ(cfg.optimizer.p, 0.1);
  EXPECT_EQ(cfg.optimizer.step_limit, 20);
  ASSERT_EQ(cfg.optimizer.injectable_kinds.size(), 2u);
  EXPECT_EQ(cfg.optimizer.injectable_kinds[0], ContextKind::kCalleeKnowledge);
  EXPECT_FALSE(cfg.summaries);
  EXPECT_EQ(cfg.commit_types.size(), 2u);
  EXPECT_EQ(cfg.llm.kind, "mock");
  EXPECT_EQ(cfg.llm.model, "m1");
  EXPECT_EQ(cfg.trace_path, "t.jsonl");
  EXPECT_NO_THROW(cfg.validate());

  // Untouched values keep their defaults.
  EXPECT_DOUBLE_EQ(cfg.optimizer.escalation_temperature, 1.0);
  EXPECT_EQ(cfg.llm.max_attempts, 3);
}

TEST(Config, ConfigEnvVariableSelectsFile) {
  TempDir dir;
  auto path = dir.path() / "c.json";
  write_file(path, R"({"retrieval": {"k": 4}})");
  auto cfg = load_config(std::nullopt, env_of({{"CMO_CONFIG", path.string()}}));
  EXPECT_EQ(cfg.retrieval.k, 4);
  try {
    load_config(dir.path() / "missing.json", env_of({}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(code_of(R"({"optimiser": {}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"optimizer": {"q": 1}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"optimizer": {"p": "high"}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"optimizer": {"p": 1.5}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"optimizer": {"injectable_kinds": ["CommitType"]}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"optimizer": {"injectable_kinds": ["Nope"]}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"retrieval": {"k": 0}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"backends": {"llm": {"kind": "grpc"}}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"backends": {"llm": {"kind": "mock"}}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"evaluator": {"weights": {"fluency": {}}}})"), ErrorCode::kConfig);
  EXPECT_EQ(code_of("{not json"), ErrorCode::kConfig);
  EXPECT_EQ(code_of(R"({"paths": {"cache_dir": "/tmp/x"}})"), std::nullopt);
}

TEST(Config, EnvOverridesFile) {
  TempDir dir;
  auto path = dir.path() / "c.json";
  write_file(path, R"({"backends": {"llm": {"model": "from-file", "base_url": "http://file"}}})");
  auto cfg = load_config(path, env_of({{"CMO_LLM_MODEL", "from-env"},
                                       {"CMO_LLM_API_KEY", "sk-secret"},
                                       {"CMO_CACHE_DIR", "/cache"},
                                       {"CMO_FORGE_URL", "https://forge"},
                                       {"CMO_FORGE_TOKEN", "tok-secret"}}));
  EXPECT_EQ(cfg.llm.model, "from-env");
  EXPECT_EQ(cfg.llm.base_url, "http://file");
  EXPECT_EQ(cfg.llm.api_key, "sk-secret");
  EXPECT_EQ(cfg.cache_dir, "/cache");
  EXPECT_EQ(cfg.forge.url, "https://forge");
  EXPECT_EQ(cfg.forge.token, "tok-secret");
}

TEST(Config, ToJsonMasksSecretsAndRoundTrips) {
  auto cfg = load_config(std::nullopt, env_of({{"CMO_LLM_API_KEY", "sk-secret"}, {"CMO_FORGE_TOKEN", "tok"}}));
  cfg.retrieval.k = 7;
  cfg.optimizer.step_limit = 12;
  auto text = cfg.to_json();
  EXPECT_EQ(text.find("sk-secret"), std::string::npos);
  EXPECT_EQ(text.find("\"tok\""), std::string::npos);
  auto j = json::parse(text);
  EXPECT_EQ(j["backends"]["llm"]["api_key"], "<set>");
  EXPECT_EQ(j["backends"]["forge"]["token"], "<set>");

  CmoConfig again;
  apply_config_json(again, text);
  EXPECT_EQ(again.retrieval.k, 7);
  EXPECT_EQ(again.optimizer.step_limit, 12);
  EXPECT_EQ(again.optimizer.injectable_kinds, cfg.optimizer.injectable_kinds);
  EXPECT_EQ(again.weights[Metric::kConciseness].use_sim, false);
}
