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

#include "cmo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cmo/error.hpp"
#include "json.hpp"

namespace cmo {
namespace {

constexpr const char* kModule = "cli";
using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kConfig, kModule, where + ": " + what);
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(where, "unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where + "." + key, "wrong type");
  }
}

void read_size(const json& j, const char* key, const std::string& where, std::size_t& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_unsigned()) fail(where + "." + key, "expected a non-negative integer");
  out = j.at(key).get<std::size_t>();
}

void read_int(const json& j, const char* key, const std::string& where, int& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_integer()) fail(where + "." + key, "expected an integer");
  out = j.at(key).get<int>();
}

void read_double(const json& j, const char* key, const std::string& where, double& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) fail(where + "." + key, "expected a number");
  out = j.at(key).get<double>();
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
}

void apply_config_json(CmoConfig& cfg, std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail("config", e.what());
  }
  check_keys(root, "config", {"evaluator", "retrieval", "optimizer", "context", "backends", "paths"});

  if (root.contains("evaluator")) {
    const auto& ev = root["evaluator"];
    check_keys(ev, "evaluator", {"weights", "scorer_models", "diff_token_budget"});
    if (ev.contains("weights")) {
      check_keys(ev["weights"], "evaluator.weights",
                 {"rationality", "comprehensiveness", "conciseness", "expressiveness"});
      for (const auto& [name, w] : ev["weights"].items()) {
        const std::string where = "evaluator.weights." + name;
        check_keys(w, where, {"sim_coeff", "llm_coeff", "use_sim"});
        auto& mw = cfg.weights[parse_metric(name)];
        read_double(w, "sim_coeff", where, mw.sim_coeff);
        read_double(w, "llm_coeff", where, mw.llm_coeff);
        read(w, "use_sim", where, mw.use_sim);
      }
    }
    if (ev.contains("scorer_models")) {
      check_keys(ev["scorer_models"], "evaluator.scorer_models",
                 {"rationality", "comprehensiveness", "conciseness", "expressiveness"});
      for (const auto& [name, id] : ev["scorer_models"].items()) {
        if (!id.is_string()) fail("evaluator.scorer_models." + name, "expected a string");
        cfg.scorer_models[static_cast<std::size_t>(parse_metric(name))] = id.get<std::string>();
      }
    }
    read_int(ev, "diff_token_budget", "evaluator", cfg.diff_token_budget);
  }

  if (root.contains("retrieval")) {
    const auto& r = root["retrieval"];
    check_keys(r, "retrieval", {"k", "diff_embedder", "text_embedder", "corpus"});
    read_int(r, "k", "retrieval", cfg.retrieval.k);
    read(r, "diff_embedder", "retrieval", cfg.retrieval.diff_embedder);
    read(r, "text_embedder", "retrieval", cfg.retrieval.text_embedder);
    read(r, "corpus", "retrieval", cfg.corpus_path);
  }

  if (root.contains("optimizer")) {
    const auto& o = root["optimizer"];
    check_keys(o, "optimizer",
               {"p", "step_limit", "base_temperature", "escalation_temperature", "injectable_kinds",
                "format_template", "context_byte_budget"});
    read_double(o, "p", "optimizer", cfg.optimizer.p);
    read_int(o, "step_limit", "optimizer", cfg.optimizer.step_limit);
    read_double(o, "base_temperature", "optimizer", cfg.optimizer.base_temperature);
    read_double(o, "escalation_temperature", "optimizer", cfg.optimizer.escalation_temperature);
    if (o.contains("injectable_kinds")) {
      std::vector<std::string> names;
      read(o, "injectable_kinds", "optimizer", names);
      cfg.optimizer.injectable_kinds.clear();
      for (const auto& n : names) cfg.optimizer.injectable_kinds.push_back(parse_context_kind(n));
    }
    read(o, "format_template", "optimizer", cfg.format_template);
    read_size(o, "context_byte_budget", "optimizer", cfg.context_byte_budget);
  }

  if (root.contains("context")) {
    const auto& c = root["context"];
    check_keys(c, "context", {"issue_byte_budget", "commit_types", "summaries"});
    read_size(c, "issue_byte_budget", "context", cfg.issue_byte_budget);
    read(c, "commit_types", "context", cfg.commit_types);
    read(c, "summaries", "context", cfg.summaries);
  }

  if (root.contains("backends")) {
    const auto& b = root["backends"];
    check_keys(b, "backends", {"llm", "forge"});
    if (b.contains("llm")) {
      const auto& l = b["llm"];
      check_keys(l, "backends.llm",
                 {"kind", "base_url", "api_key", "model", "mock_script", "max_attempts", "timeout_ms", "cache"});
      read(l, "kind", "backends.llm", cfg.llm.kind);
      read(l, "base_url", "backends.llm", cfg.llm.base_url);
      read(l, "api_key", "backends.llm", cfg.llm.api_key);
      read(l, "model", "backends.llm", cfg.llm.model);
      read(l, "mock_script", "backends.llm", cfg.llm.mock_script);
      read_int(l, "max_attempts", "backends.llm", cfg.llm.max_attempts);
      read_int(l, "timeout_ms", "backends.llm", cfg.llm.timeout_ms);
      read(l, "cache", "backends.llm", cfg.llm.cache);
    }
    if (b.contains("forge")) {
      const auto& f = b["forge"];
      check_keys(f, "backends.forge", {"url", "token", "fixture_dir"});
      read(f, "url", "backends.forge", cfg.forge.url);
      read(f, "token", "backends.forge", cfg.forge.token);
      read(f, "fixture_dir", "backends.forge", cfg.forge.fixture_dir);
    }
  }

  if (root.contains("paths")) {
    const auto& p = root["paths"];
    check_keys(p, "paths", {"cache_dir", "trace"});
    read(p, "cache_dir", "paths", cfg.cache_dir);
    read(p, "trace", "paths", cfg.trace_path);
  }
}

void CmoConfig::validate() const {
  weights.validate();
  optimizer.validate();
  if (retrieval.k < 1) fail("retrieval.k", "must be positive");
  if (diff_token_budget < 1) fail("evaluator.diff_token_budget", "must be positive");
  if (commit_types.empty()) fail("context.commit_types", "must not be empty");
  if (llm.kind != "http" && llm.kind != "mock") fail("backends.llm.kind", "must be 'http' or 'mock'");
  if (llm.kind == "mock" && llm.mock_script.empty()) fail("backends.llm.mock_script", "required for the mock backend");
  if (llm.max_attempts < 1) fail("backends.llm.max_attempts", "must be positive");
}

std::string CmoConfig::to_json() const {
  ordered_json w = ordered_json::object();
  ordered_json models = ordered_json::object();
  for (auto m : kAllMetrics) {
    const auto& mw = weights[m];
    w[std::string(metric_name(m))] = {{"sim_coeff", mw.sim_coeff}, {"llm_coeff", mw.llm_coeff}, {"use_sim", mw.use_sim}};
    models[std::string(metric_name(m))] = scorer_models[static_cast<std::size_t>(m)];
  }
  ordered_json kinds = ordered_json::array();
  for (auto k : optimizer.injectable_kinds) kinds.push_back(std::string(context_kind_name(k)));
  ordered_json j = {
      {"evaluator", {{"weights", w}, {"scorer_models", models}, {"diff_token_budget", diff_token_budget}}},
      {"retrieval",
       {{"k", retrieval.k},
        {"diff_embedder", retrieval.diff_embedder},
        {"text_embedder", retrieval.text_embedder},
        {"corpus", corpus_path}}},
      {"optimizer",
       {{"p", optimizer.p},
        {"step_limit", optimizer.step_limit},
        {"base_temperature", optimizer.base_temperature},
        {"escalation_temperature", optimizer.escalation_temperature},
        {"injectable_kinds", kinds},
        {"format_template", format_template},
        {"context_byte_budget", context_byte_budget}}},
      {"context", {{"issue_byte_budget", issue_byte_budget}, {"commit_types", commit_types}, {"summaries", summaries}}},
      {"backends",
       {{"llm",
         {{"kind", llm.kind},
          {"base_url", llm.base_url},
          {"api_key", llm.api_key.empty() ? "" : "<set>"},
          {"model", llm.model},
          {"mock_script", llm.mock_script},
          {"max_attempts", llm.max_attempts},
          {"timeout_ms", llm.timeout_ms},
          {"cache", llm.cache}}},
        {"forge", {{"url", forge.url}, {"token", forge.token.empty() ? "" : "<set>"}, {"fixture_dir", forge.fixture_dir}}}}},
      {"paths", {{"cache_dir", cache_dir}, {"trace", trace_path}}}};
  return j.dump(2);
}

CmoConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  CmoConfig cfg;
  std::optional<std::filesystem::path> path = file;
  if (!path) {
    if (auto p = env("CMO_CONFIG")) path = *p;
  }
  if (path) {
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kConfig, kModule, "cannot read config file " + path->string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_json(cfg, ss.str());
  }
  if (auto v = env("CMO_LLM_BASE_URL")) cfg.llm.base_url = *v;
  if (auto v = env("CMO_LLM_API_KEY")) cfg.llm.api_key = *v;
  if (auto v = env("CMO_LLM_MODEL")) cfg.llm.model = *v;
  if (auto v = env("CMO_CACHE_DIR")) cfg.cache_dir = *v;
  if (auto v = env("CMO_FORGE_URL")) cfg.forge.url = *v;
  if (auto v = env("CMO_FORGE_TOKEN")) cfg.forge.token = *v;
  return cfg;
}

}  // namespace cmo
