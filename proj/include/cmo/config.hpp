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

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cmo/optimizer.hpp"
#include "cmo/quality.hpp"
#include "cmo/retrieval.hpp"

namespace cmo {

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Reads the process environment; empty values count as unset.
EnvLookup process_env();

struct LlmBackendConfig {
  std::string kind = "http";  // http or mock
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::string model = "gpt-4";
  std::string mock_script;
  int max_attempts = 3;
  int timeout_ms = 120000;
  bool cache = true;
};

struct ForgeConfig {
  std::string url;
  std::string token;
  std::string fixture_dir;
};

struct CmoConfig {
  // evaluator
  EvaluatorWeights weights;
  std::array<std::string, 4> scorer_models{};  // empty: the llm backend's model
  int diff_token_budget = 6000;
  // retrieval
  RetrievalConfig retrieval;
  std::string corpus_path;
  // optimizer
  OptimizerConfig optimizer;
  std::string format_template = kDefaultFormatTemplate;
  std::size_t context_byte_budget = 4096;
  std::size_t issue_byte_budget = 2048;
  std::vector<std::string> commit_types = default_commit_taxonomy();
  bool summaries = true;
  // backends
  LlmBackendConfig llm;
  ForgeConfig forge;
  // paths
  std::string cache_dir;
  std::string trace_path;

  // Full resolved configuration as JSON, in the file layout.
  std::string to_json() const;
  void validate() const;
};

// Overlays a JSON config document. Unknown keys and type errors throw Error(kConfig).
void apply_config_json(CmoConfig& cfg, std::string_view text);

// Defaults, then the file (explicit path, else $CMO_CONFIG), then environment.
CmoConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env);

}  // namespace cmo
