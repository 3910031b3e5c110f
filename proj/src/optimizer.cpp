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

#include "cmo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <fmt/format.h>

#include "cmo/error.hpp"
#include "cmo/log.hpp"
#include "cmo/text_util.hpp"
#include "json.hpp"

namespace cmo {
namespace {

constexpr const char* kModule = "optimizer";
using nlohmann::ordered_json;

std::string strip_fences(std::string text) {
  text = trim(text);
  if (text.rfind("```", 0) == 0) {
    auto nl = text.find('\n');
    auto end = text.rfind("```");
    if (nl != std::string::npos && end != std::string::npos && end > nl) text = trim(text.substr(nl + 1, end - nl - 1));
  }
  return text;
}

void append_common_sections(std::string& user, const CommitDiff& diff, const std::vector<Exemplar>& exemplars,
                            const PromptOptions& opts) {
  user +=
      "## What a git diff is\n"
      "A git diff shows the lines a commit removed (prefixed with '-') and added (prefixed with '+'), grouped into "
      "hunks per changed file; unprefixed lines are unchanged context.\n\n";
  user += "## Expected message format\n" + opts.format_template + "\n\n";
  user += "## Similar commits\n";
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    user += fmt::format("### Example {}\nDiff:\n```diff\n{}\n```\nMessage:\n{}\n\n", i + 1,
                        truncate_for_prompt(exemplars[i].diff_text, opts.exemplar_diff_token_budget),
                        trim(exemplars[i].message));
  }
  user += "## Target git diff\n```diff\n" + truncate_for_prompt(diff.raw_text, opts.diff_token_budget) + "\n```\n\n";
}

}  // namespace

void OptimizerConfig::validate() const {
  if (!(p > 0 && p < 1)) throw Error(ErrorCode::kConfig, kModule, "p must be in (0, 1)");
  if (step_limit < 1) throw Error(ErrorCode::kConfig, kModule, "step_limit must be at least 1");
  if (base_temperature < 0) throw Error(ErrorCode::kConfig, kModule, "base_temperature must be non-negative");
  if (escalation_temperature < base_temperature) {
    throw Error(ErrorCode::kConfig, kModule, "escalation_temperature must be >= base_temperature");
  }
  std::set<ContextKind> seen;
  for (auto k : injectable_kinds) {
    if (!is_injectable(k)) throw Error(ErrorCode::kConfig, kModule, "CommitType cannot be injected");
    if (!seen.insert(k).second) throw Error(ErrorCode::kConfig, kModule, "duplicate injectable kind");
  }
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::kStepLimit: return "step_limit";
    case StopReason::kConverged: return "converged";
    case StopReason::kQueueExhausted: return "queue_exhausted";
  }
  return "?";
}

std::string TraceEvent::to_json() const {
  ordered_json j;
  j["event"] = event;
  j["step"] = step;
  j["candidate_id"] = candidate_id;
  j["parent_id"] = parent_id ? ordered_json(*parent_id) : ordered_json(nullptr);
  j["kind"] = kind ? ordered_json(std::string(context_kind_name(*kind))) : ordered_json(nullptr);
  j["score"] = score;
  j["threshold"] = threshold;
  j["temperature"] = temperature;
  if (reason) j["reason"] = std::string(stop_reason_name(*reason));
  return j.dump();
}

std::vector<Exemplar> exemplars_from(const std::vector<Neighbor>& neighbors) {
  std::vector<Exemplar> out;
  for (const auto& n : neighbors) out.push_back({n.entry->diff_text, n.entry->message_text});
  return out;
}

LlmUpdater::LlmUpdater(llm::ChatClient& client, std::vector<Exemplar> exemplars, std::string commit_type,
                       PromptOptions opts)
    : client_(client), exemplars_(std::move(exemplars)), commit_type_(std::move(commit_type)), opts_(std::move(opts)) {}

llm::ChatRequest LlmUpdater::build_request(const UpdateRequest& req) const {
  if (req.current == nullptr || req.diff == nullptr || req.context == nullptr) {
    throw Error(ErrorCode::kPreconditionViolation, kModule, "incomplete update request");
  }
  std::string system =
      "You are an expert software engineer who improves commit messages. You are given an existing commit message "
      "and must rewrite it so it scores higher on the quality metrics, using the new context provided.";
  std::string user =
      "## Task\nImprove the existing commit message for the target git diff. Keep what is accurate, address the "
      "weakest metrics in the feedback, and use the new context only where it helps explain the change.\n\n";
  append_common_sections(user, *req.diff, exemplars_, opts_);
  user += "## Quality metrics (each scored 0-4)\n";
  for (auto m : kAllMetrics) user += "- " + std::string(metric_definition(m)) + "\n";
  user += "\n## Commit type\n" + (commit_type_.empty() ? std::string("unknown") : commit_type_) + "\n\n";
  user += "## Current commit message\n" + req.current->text + "\n\n";
  user += "## Feedback scores for the current message\n";
  for (auto m : kAllMetrics) user += fmt::format("- {}: {:.2f}\n", metric_name(m), req.feedback[m]);
  user += "\n## Contexts already considered\n";
  if (req.considered.empty()) user += "none\n";
  for (auto k : req.considered) user += "- " + std::string(context_kind_name(k)) + "\n";
  user += "\n## New context (" + std::string(context_kind_name(req.context->kind)) + ")\n" + req.context->payload +
          "\n\n";
  user += "## Answer\nReturn only the improved commit message, without commentary or code fences.\n";
  return llm::make_request(std::move(system), std::move(user), req.temperature, opts_.model_id);
}

std::string LlmUpdater::update(const UpdateRequest& req) {
  auto resp = client_.chat(build_request(req));
  auto text = strip_fences(resp.content);
  if (text.empty()) throw Error(ErrorCode::kMalformedResponse, kModule, "updater returned an empty message");
  return text;
}

llm::ChatRequest initial_message_request(const CommitDiff& diff, const std::vector<Exemplar>& exemplars,
                                         const PromptOptions& opts) {
  std::string system = "You are an expert software engineer who writes commit messages.";
  std::string user = "## Task\nWrite a commit message for the target git diff.\n\n";
  append_common_sections(user, diff, exemplars, opts);
  user += "## Answer\nReturn only the commit message, without commentary or code fences.\n";
  return llm::make_request(std::move(system), std::move(user), 0.0, opts.model_id);
}

std::string generate_initial_message(const CommitDiff& diff, const std::vector<Exemplar>& exemplars,
                                     llm::ChatClient& client, const PromptOptions& opts) {
  if (exemplars.empty()) throw Error(ErrorCode::kEmptyCorpus, kModule, "blank mode needs retrieved exemplars");
  auto resp = client.chat(initial_message_request(diff, exemplars, opts));
  auto text = strip_fences(resp.content);
  if (text.empty()) throw Error(ErrorCode::kMalformedResponse, kModule, "initial message is empty");
  return text;
}

std::map<ContextKind, ContextItem> bundle_contexts(const std::map<ContextKind, std::vector<ContextItem>>& items,
                                                   std::size_t byte_budget) {
  std::map<ContextKind, ContextItem> out;
  for (const auto& [kind, list] : items) {
    if (list.empty()) continue;
    std::vector<const ContextItem*> order;
    for (const auto& it : list) order.push_back(&it);
    std::stable_sort(order.begin(), order.end(),
                     [](const ContextItem* a, const ContextItem* b) { return a->payload.size() > b->payload.size(); });
    auto render = [](const ContextItem& it) {
      if (!it.locator) return it.payload;
      return fmt::format("[{}:{}-{}]\n{}", it.locator->path, it.locator->span.begin, it.locator->span.end, it.payload);
    };
    std::string payload;
    std::size_t used = 0;
    for (const auto* it : order) {
      auto piece = render(*it);
      std::size_t extra = piece.size() + (payload.empty() ? 0 : 2);
      if (payload.size() + extra > byte_budget) continue;
      if (!payload.empty()) payload += "\n\n";
      payload += piece;
      ++used;
    }
    if (payload.empty()) {
      payload = truncate_utf8(render(*order.front()), byte_budget);
      used = 1;
    }
    ContextItem bundle;
    bundle.kind = kind;
    bundle.payload = std::move(payload);
    if (list.size() == 1) bundle.locator = list.front().locator;
    bundle.provenance = fmt::format("bundle({} of {} items, budget {})", used, list.size(), byte_budget);
    out.emplace(kind, std::move(bundle));
  }
  return out;
}

double decay_threshold(double threshold, int step, int step_limit, double min_threshold) {
  double t = threshold * static_cast<double>(step_limit - step) / static_cast<double>(step_limit);
  return t < min_threshold ? min_threshold : t;
}

OptimizationResult optimize(const CommitDiff& diff, const std::string& initial_message,
                            const std::map<ContextKind, ContextItem>& contexts, const OptimizerConfig& cfg,
                            CandidateEvaluator& evaluator, MessageUpdater& updater,
                            const std::optional<std::filesystem::path>& trace_path) {
  cfg.validate();
  if (trim(initial_message).empty()) {
    throw Error(ErrorCode::kPreconditionViolation, kModule, "initial message is empty");
  }
  std::vector<ContextKind> available;
  for (auto k : cfg.injectable_kinds) {
    if (contexts.count(k)) available.push_back(k);
  }
  auto is_terminal = [&](const std::set<ContextKind>& considered) {
    return std::all_of(available.begin(), available.end(), [&](ContextKind k) { return considered.count(k) > 0; });
  };

  OptimizationResult result;
  std::optional<std::ofstream> trace_out;
  if (trace_path) {
    trace_out.emplace(*trace_path, std::ios::binary | std::ios::trunc);
    if (!*trace_out) throw Error(ErrorCode::kIo, kModule, "cannot write trace " + trace_path->string());
    result.trace_path = trace_path;
  }
  auto emit = [&](TraceEvent ev) {
    if (trace_out) *trace_out << ev.to_json() << '\n';
    result.trace.push_back(std::move(ev));
  };

  const int N = cfg.step_limit;
  auto root_eval = evaluator.evaluate(diff, initial_message);
  MessageCandidate root;
  root.id = "c0";
  root.text = initial_message;
  root.quality = root_eval.quality;
  root.score = root_eval.score;
  root.terminal = is_terminal(root.considered);

  double highest = root.score;
  double threshold = highest * cfg.p;
  const double min_threshold = threshold / N;
  double temperature = cfg.base_temperature;
  std::vector<double> history{highest};
  MessageCandidate best = root;
  result.initial_score = root.score;

  std::deque<MessageCandidate> queue;
  std::uint64_t next_seq = 1;
  queue.push_back(root);
  emit({"enqueue", 0, root.id, std::nullopt, std::nullopt, root.score, threshold, temperature, std::nullopt});

  int step = 0;
  int expansions = 0;
  StopReason stop = StopReason::kStepLimit;
  while (step < N) {
    ++step;
    threshold = decay_threshold(threshold, step, N, min_threshold);

    std::optional<MessageCandidate> cur;
    while (!queue.empty()) {
      MessageCandidate c = std::move(queue.front());
      queue.pop_front();
      if (!c.terminal) {
        cur = std::move(c);
        break;
      }
    }
    if (!cur) {
      stop = StopReason::kQueueExhausted;
      break;
    }
    ++expansions;
    emit({"dequeue", step, cur->id, cur->parent_id, cur->applied, cur->score, threshold, temperature, std::nullopt});

    std::vector<ContextKind> considered_list;
    for (auto k : available) {
      if (cur->considered.count(k)) considered_list.push_back(k);
    }
    for (auto kind : available) {
      if (cur->considered.count(kind)) continue;
      UpdateRequest req;
      req.current = &*cur;
      req.diff = &diff;
      req.context = &contexts.at(kind);
      req.considered = considered_list;
      req.feedback = cur->quality;
      req.temperature = temperature;
      MessageCandidate child;
      try {
        child.text = updater.update(req);
        auto ev = evaluator.evaluate(diff, child.text);
        child.quality = ev.quality;
        child.score = ev.score;
      } catch (const Error& e) {
        log::warn(kModule, "skipping candidate from " + cur->id + " with " + std::string(context_kind_name(kind)) +
                               ": " + e.what());
        continue;
      }
      child.seq = next_seq++;
      child.id = "c" + std::to_string(child.seq);
      child.parent_id = cur->id;
      child.step_created = step;
      child.applied = kind;
      child.considered = cur->considered;
      child.considered.insert(kind);
      child.terminal = is_terminal(child.considered);
      emit({"update", step, child.id, child.parent_id, kind, child.score, threshold, temperature, std::nullopt});
      emit({"enqueue", step, child.id, child.parent_id, kind, child.score, threshold, temperature, std::nullopt});
      queue.push_back(std::move(child));
    }
    std::stable_sort(queue.begin(), queue.end(), [](const MessageCandidate& a, const MessageCandidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.seq < b.seq;
    });

    if (!queue.empty() && queue.front().score > highest) {
      const double previous = highest;
      highest = queue.front().score;
      best = queue.front();
      history.push_back(highest);
      ++result.recorded_updates;
      emit({"best", step, best.id, best.parent_id, best.applied, best.score, threshold, temperature, std::nullopt});
      if (history.size() >= 3 && highest - history[history.size() - 3] < threshold) {
        stop = StopReason::kConverged;
        break;
      }
      temperature = (highest - previous < threshold) ? cfg.escalation_temperature : cfg.base_temperature;
    }
  }

  result.message = best.text;
  result.quality = best.quality;
  result.score = best.score;
  result.steps_used = expansions;
  result.stop_reason = stop;
  emit({"stop", step, best.id, best.parent_id, best.applied, best.score, threshold, temperature, stop});
  return result;
}

}  // namespace cmo
