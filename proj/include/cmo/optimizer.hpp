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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cmo/context.hpp"
#include "cmo/diff_model.hpp"
#include "cmo/llm.hpp"
#include "cmo/quality.hpp"

namespace cmo {

inline constexpr const char* kDefaultFormatTemplate =
    "<type>: <subject>\n\n- <what changed and why>\n- <further detail>";

struct OptimizerConfig {
  double p = 0.05;
  int step_limit = 50;
  double base_temperature = 0.0;
  double escalation_temperature = 1.0;
  std::vector<ContextKind> injectable_kinds{kInjectableKinds.begin(), kInjectableKinds.end()};

  // Throws Error(kConfig).
  void validate() const;
};

struct MessageCandidate {
  std::string id;
  std::string text;
  std::set<ContextKind> considered;
  QualityVector quality;
  double score = 0.0;
  std::optional<std::string> parent_id;
  int step_created = 0;
  std::optional<ContextKind> applied;
  bool terminal = false;
  std::uint64_t seq = 0;  // insertion order, the queue tie-break
};

enum class StopReason { kStepLimit, kConverged, kQueueExhausted };
std::string_view stop_reason_name(StopReason r);

struct TraceEvent {
  std::string event;  // enqueue, dequeue, update, best, stop
  int step = 0;
  std::string candidate_id;
  std::optional<std::string> parent_id;
  std::optional<ContextKind> kind;
  double score = 0.0;
  double threshold = 0.0;
  double temperature = 0.0;
  std::optional<StopReason> reason;  // stop events only

  // One JSON object, keys in a fixed order, no trailing newline.
  std::string to_json() const;
};

struct OptimizationResult {
  std::string message;
  QualityVector quality;
  double score = 0.0;
  double initial_score = 0.0;
  int steps_used = 0;
  int recorded_updates = 0;
  StopReason stop_reason = StopReason::kStepLimit;
  std::vector<TraceEvent> trace;
  std::optional<std::filesystem::path> trace_path;
};

struct UpdateRequest {
  const MessageCandidate* current = nullptr;
  const CommitDiff* diff = nullptr;
  const ContextItem* context = nullptr;
  std::vector<ContextKind> considered;
  QualityVector feedback;
  double temperature = 0.0;
};

class MessageUpdater {
 public:
  virtual ~MessageUpdater() = default;
  // Returns the revised message text. Errors skip the candidate.
  virtual std::string update(const UpdateRequest& req) = 0;
};

struct Exemplar {
  std::string diff_text;
  std::string message;
};

std::vector<Exemplar> exemplars_from(const std::vector<Neighbor>& neighbors);

struct PromptOptions {
  std::string format_template = kDefaultFormatTemplate;
  int diff_token_budget = 6000;
  int exemplar_diff_token_budget = 500;
  std::string model_id;
};

// Chat-backed UPDATE: one prompt per (candidate, context kind).
class LlmUpdater : public MessageUpdater {
 public:
  LlmUpdater(llm::ChatClient& client, std::vector<Exemplar> exemplars, std::string commit_type, PromptOptions opts = {});
  std::string update(const UpdateRequest& req) override;
  llm::ChatRequest build_request(const UpdateRequest& req) const;

 private:
  llm::ChatClient& client_;
  std::vector<Exemplar> exemplars_;
  std::string commit_type_;
  PromptOptions opts_;
};

// Blank mode: a first message written from the diff and exemplars alone.
// Throws Error(kEmptyCorpus) without exemplars; backend errors propagate.
std::string generate_initial_message(const CommitDiff& diff, const std::vector<Exemplar>& exemplars,
                                     llm::ChatClient& client, const PromptOptions& opts = {});
llm::ChatRequest initial_message_request(const CommitDiff& diff, const std::vector<Exemplar>& exemplars,
                                         const PromptOptions& opts);

// One injection unit per kind: items concatenated largest-first while they fit
// in `byte_budget`; the largest item is truncated when none fits.
std::map<ContextKind, ContextItem> bundle_contexts(const std::map<ContextKind, std::vector<ContextItem>>& items,
                                                   std::size_t byte_budget = 4096);

// thr * (N - step) / N, clamped up to min_threshold.
double decay_threshold(double threshold, int step, int step_limit, double min_threshold);

// The priority-queue search. Fails only when evaluating the initial message fails.
OptimizationResult optimize(const CommitDiff& diff, const std::string& initial_message,
                            const std::map<ContextKind, ContextItem>& contexts, const OptimizerConfig& cfg,
                            CandidateEvaluator& evaluator, MessageUpdater& updater,
                            const std::optional<std::filesystem::path>& trace_path = std::nullopt);

}  // namespace cmo
