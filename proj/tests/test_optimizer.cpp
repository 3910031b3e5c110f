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

#include <cmath>
#include <random>

#include "cmo/error.hpp"
#include "cmo/llm.hpp"
#include "cmo/optimizer.hpp"
#include "fixture_repo.hpp"
#include "optimizer_mocks.hpp"

using namespace cmo;
using namespace cmo::testing;

namespace {

std::vector<const TraceEvent*> events_of(const OptimizationResult& r, const std::string& name) {
  std::vector<const TraceEvent*> out;
  for (const auto& e : r.trace) {
    if (e.event == name) out.push_back(&e);
  }
  return out;
}

}  // namespace

TEST(DecayThreshold, HandValues) {
  double thr = 10 * 0.05;
  const double min = thr / 50;
  const double expected[] = {0.49, 0.4704, 0.442176, 0.40680192};
  for (int step = 1; step <= 4; ++step) {
    thr = decay_threshold(thr, step, 50, min);
    EXPECT_NEAR(thr, expected[step - 1], 1e-12) << step;
  }
  EXPECT_DOUBLE_EQ(decay_threshold(0.5, 50, 50, 0.01), 0.01);
  EXPECT_DOUBLE_EQ(decay_threshold(0.5, 49, 50, 0.5), 0.5);
}

TEST(OptimizerConfig, DefaultsAndValidation) {
  OptimizerConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.p, 0.05);
  EXPECT_EQ(cfg.step_limit, 50);
  EXPECT_DOUBLE_EQ(cfg.base_temperature, 0.0);
  EXPECT_DOUBLE_EQ(cfg.escalation_temperature, 1.0);
  EXPECT_EQ(cfg.injectable_kinds.size(), 7u);
  EXPECT_NO_THROW(cfg.validate());

  auto expect_config_error = [](OptimizerConfig c) {
    try {
      c.validate();
      FAIL() << "expected kConfig";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfig);
    }
  };
  OptimizerConfig c = cfg;
  c.p = 0;
  expect_config_error(c);
  c = cfg;
  c.p = 1;
  expect_config_error(c);
  c = cfg;
  c.step_limit = 0;
  expect_config_error(c);
  c = cfg;
  c.base_temperature = 2.0;
  expect_config_error(c);
  c = cfg;
  c.injectable_kinds = {ContextKind::kCommitType};
  expect_config_error(c);
  c = cfg;
  c.injectable_kinds = {ContextKind::kCalleeKnowledge, ContextKind::kCalleeKnowledge};
  expect_config_error(c);
}

TEST(Optimize, PlusOnePerMarker) {
  auto eval = plus_per_marker(8.0, 1.0);
  MarkerUpdater upd;
  auto r = optimize(tiny_diff(), "msg", all_contexts(), OptimizerConfig{}, eval, upd);
  EXPECT_DOUBLE_EQ(r.initial_score, 8.0);
  EXPECT_DOUBLE_EQ(r.score, 15.0);
  EXPECT_EQ(count_markers(r.message), 7);
  EXPECT_LE(r.recorded_updates, 7);
  EXPECT_EQ(r.recorded_updates, 7);
  EXPECT_EQ(r.stop_reason, StopReason::kStepLimit);
  EXPECT_EQ(r.steps_used, 50);
  EXPECT_EQ(events_of(r, "best").size(), 7u);
  ASSERT_EQ(r.trace.back().event, "stop");
  EXPECT_EQ(r.trace.back().reason, StopReason::kStepLimit);
  for (double t : upd.temperatures) EXPECT_DOUBLE_EQ(t, 0.0);
}

TEST(Optimize, TraceIsByteIdenticalAcrossRuns) {
  TempDir dir;
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    auto eval = plus_per_marker(8.0, 1.0);
    MarkerUpdater upd;
    auto path = dir.path() / ("trace" + std::to_string(i) + ".jsonl");
    auto r = optimize(tiny_diff(), "msg", all_contexts(), OptimizerConfig{}, eval, upd, path);
    ASSERT_EQ(r.trace_path, path);
    files[i] = read_file(path);
    std::string joined;
    for (const auto& e : r.trace) joined += e.to_json() + "\n";
    EXPECT_EQ(files[i], joined);
  }
  EXPECT_FALSE(files[0].empty());
  EXPECT_EQ(files[0], files[1]);
}

TEST(Optimize, ShrinkingIncrementsConvergeAtPredictedStep) {
  const std::vector<double> inc{1.0, 0.6, 0.3, 0.1};
  const int predicted = predicted_convergence_step({10.0, 11.0, 11.6, 11.9, 12.0}, 0.05, 50);
  ASSERT_EQ(predicted, 4);

  auto eval = shrinking_increments(10.0, inc);
  MarkerUpdater upd;
  auto r = optimize(tiny_diff(), "msg", all_contexts(), OptimizerConfig{}, eval, upd);
  EXPECT_EQ(r.stop_reason, StopReason::kConverged);
  EXPECT_EQ(r.steps_used, predicted);
  EXPECT_EQ(r.recorded_updates, 4);
  EXPECT_DOUBLE_EQ(r.score, 12.0);
  ASSERT_EQ(r.trace.back().event, "stop");
  EXPECT_EQ(r.trace.back().step, predicted);
  EXPECT_EQ(r.trace.back().reason, StopReason::kConverged);
  EXPECT_NEAR(r.trace.back().threshold, 0.40680192, 1e-12);

  // The gain at step 3 (0.3) falls under that step's threshold, so step 4
  // expands with the escalation temperature.
  for (const auto* e : events_of(r, "update")) {
    EXPECT_DOUBLE_EQ(e->temperature, e->step == 4 ? 1.0 : 0.0) << e->step;
  }
  auto dequeues = events_of(r, "dequeue");
  ASSERT_EQ(dequeues.size(), 4u);
  const double thresholds[] = {0.49, 0.4704, 0.442176, 0.40680192};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(dequeues[i]->threshold, thresholds[i], 1e-12);
}

TEST(Optimize, QueueExhaustedWhenFewContexts) {
  auto eval = plus_per_marker(5.0, 1.0);
  MarkerUpdater upd;
  auto ctx = all_contexts();
  std::map<ContextKind, ContextItem> two{{ContextKind::kCalleeKnowledge, ctx[ContextKind::kCalleeKnowledge]},
                                         {ContextKind::kVariableDataType, ctx[ContextKind::kVariableDataType]}};
  OptimizerConfig cfg;
  cfg.step_limit = 100;
  auto r = optimize(tiny_diff(), "msg", two, cfg, eval, upd);
  EXPECT_EQ(r.stop_reason, StopReason::kQueueExhausted);
  // root, then its two children (the grandchildren are terminal).
  EXPECT_EQ(r.steps_used, 3);
  EXPECT_DOUBLE_EQ(r.score, 7.0);
  EXPECT_EQ(r.recorded_updates, 2);
}

TEST(Optimize, NoContextsKeepsInitialMessage) {
  auto eval = plus_per_marker(5.0, 1.0);
  MarkerUpdater upd;
  auto r = optimize(tiny_diff(), "initial", {}, OptimizerConfig{}, eval, upd);
  EXPECT_EQ(r.stop_reason, StopReason::kQueueExhausted);
  EXPECT_EQ(r.steps_used, 0);
  EXPECT_EQ(r.message, "initial");
  EXPECT_EQ(r.recorded_updates, 0);
  EXPECT_EQ(eval.calls, 1);
}

TEST(Optimize, InjectableKindsRestrictExpansion) {
  auto eval = plus_per_marker(5.0, 1.0);
  MarkerUpdater upd;
  OptimizerConfig cfg;
  cfg.injectable_kinds = {ContextKind::kEnclosingCodeBlock};
  auto r = optimize(tiny_diff(), "m", all_contexts(), cfg, eval, upd);
  EXPECT_EQ(r.message, "m [EnclosingCodeBlock]");
  EXPECT_EQ(r.steps_used, 1);
}

TEST(Optimize, EmptyInitialMessageRejected) {
  auto eval = plus_per_marker(5.0, 1.0);
  MarkerUpdater upd;
  try {
    optimize(tiny_diff(), "  \n", all_contexts(), OptimizerConfig{}, eval, upd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolation);
  }
}

namespace {

class FailingUpdater : public MessageUpdater {
 public:
  explicit FailingUpdater(ContextKind bad) : bad_(bad) {}
  std::string update(const UpdateRequest& req) override {
    if (req.context->kind == bad_) throw Error(ErrorCode::kMalformedResponse, "test", "bad output");
    return req.current->text + " [" + std::string(context_kind_name(req.context->kind)) + "]";
  }

 private:
  ContextKind bad_;
};

}  // namespace

TEST(Optimize, UpdaterErrorsSkipCandidate) {
  auto eval = plus_per_marker(0.0, 1.0);
  FailingUpdater upd(ContextKind::kCalleeKnowledge);
  OptimizerConfig cfg;
  cfg.step_limit = 200;
  auto r = optimize(tiny_diff(), "m", all_contexts(), cfg, eval, upd);
  EXPECT_EQ(r.message.find("CalleeKnowledge"), std::string::npos);
  EXPECT_EQ(count_markers(r.message), 6);
  for (const auto* e : events_of(r, "update")) EXPECT_NE(e->kind, ContextKind::kCalleeKnowledge);
}

TEST(Optimize, UpdateRequestCarriesFeedbackAndConsidered) {
  auto eval = plus_per_marker(4.0, 1.0);
  struct Recorder : MessageUpdater {
    std::vector<std::pair<std::size_t, double>> seen;
    std::string update(const UpdateRequest& req) override {
      seen.emplace_back(req.considered.size(), req.feedback.values[0]);
      EXPECT_EQ(req.current->considered.size(), req.considered.size());
      return req.current->text + " [x]";
    }
  } upd;
  OptimizerConfig cfg;
  cfg.step_limit = 2;
  optimize(tiny_diff(), "m", all_contexts(), cfg, eval, upd);
  ASSERT_EQ(upd.seen.size(), 13u);
  for (int i = 0; i < 7; ++i) {
    EXPECT_EQ(upd.seen[i].first, 0u);
    EXPECT_DOUBLE_EQ(upd.seen[i].second, 1.0);
  }
  for (int i = 7; i < 13; ++i) {
    EXPECT_EQ(upd.seen[i].first, 1u);
    EXPECT_DOUBLE_EQ(upd.seen[i].second, 1.25);
  }
}

TEST(Optimize, NeverRegressesOnRandomizedScores) {
  std::mt19937_64 rng(20241019);
  for (int run = 0; run < 50; ++run) {
    std::uniform_real_distribution<double> u(0.0, 16.0);
    const bool adversarial = run % 2 == 1;
    const double initial = adversarial ? 16.0 : u(rng);
    std::map<std::string, double> memo;
    std::uint64_t seed = rng();
    ScriptedEvaluator eval([&, seed](const std::string& m) {
      if (m == "start") return initial;
      auto it = memo.find(m);
      if (it != memo.end()) return it->second;
      std::mt19937_64 local(seed ^ std::hash<std::string>{}(m));
      double s = std::uniform_real_distribution<double>(0.0, adversarial ? 15.0 : 16.0)(local);
      memo[m] = s;
      return s;
    });
    MarkerUpdater upd;
    OptimizerConfig cfg;
    cfg.step_limit = 1 + static_cast<int>(rng() % 60);
    auto r = optimize(tiny_diff(), "start", all_contexts(), cfg, eval, upd);
    EXPECT_GE(r.score, r.initial_score) << run;
    if (r.recorded_updates == 0) EXPECT_EQ(r.message, "start") << run;
    if (adversarial) {
      EXPECT_EQ(r.recorded_updates, 0);
      EXPECT_EQ(r.message, "start");
    }
  }
}

TEST(TraceEvent, KeyOrder) {
  TraceEvent ev{"stop", 3, "c5", std::string("c1"), ContextKind::kVariableDataType, 1.5, 0.25, 1.0,
                StopReason::kConverged};
  EXPECT_EQ(ev.to_json(),
            R"({"event":"stop","step":3,"candidate_id":"c5","parent_id":"c1","kind":"VariableDataType",)"
            R"("score":1.5,"threshold":0.25,"temperature":1.0,"reason":"converged"})");
  TraceEvent root{"enqueue", 0, "c0", std::nullopt, std::nullopt, 2.0, 0.1, 0.0, std::nullopt};
  EXPECT_EQ(root.to_json(),
            R"({"event":"enqueue","step":0,"candidate_id":"c0","parent_id":null,"kind":null,)"
            R"("score":2.0,"threshold":0.1,"temperature":0.0})");
}

TEST(BundleContexts, BudgetAndOrder) {
  std::map<ContextKind, std::vector<ContextItem>> items;
  auto mk = [](std::string payload, std::optional<Locator> loc = std::nullopt) {
    ContextItem it;
    it.kind = ContextKind::kEnclosingCodeBlock;
    it.payload = std::move(payload);
    it.locator = std::move(loc);
    return it;
  };
  items[ContextKind::kEnclosingCodeBlock] = {mk("short"), mk(std::string(30, 'L')), mk("mid-size")};
  auto out = bundle_contexts(items, 1000);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[ContextKind::kEnclosingCodeBlock].payload, std::string(30, 'L') + "\n\nmid-size\n\nshort");
  EXPECT_FALSE(out[ContextKind::kEnclosingCodeBlock].locator);

  // 30 + 2 + 8 = 40 fits; "short" would need 7 more.
  out = bundle_contexts(items, 44);
  EXPECT_EQ(out[ContextKind::kEnclosingCodeBlock].payload, std::string(30, 'L') + "\n\nmid-size");
  EXPECT_NE(out[ContextKind::kEnclosingCodeBlock].provenance.find("2 of 3"), std::string::npos);

  // Nothing fits whole: the largest item is truncated.
  out = bundle_contexts(items, 4);
  EXPECT_LE(out[ContextKind::kEnclosingCodeBlock].payload.size(), 4u);
  EXPECT_EQ(out[ContextKind::kEnclosingCodeBlock].payload.substr(0, 1), "L");

  std::map<ContextKind, std::vector<ContextItem>> single;
  single[ContextKind::kCalleeKnowledge] = {mk("body", Locator{"A.java", Side::kPost, {3, 5}})};
  out = bundle_contexts(single, 1000);
  EXPECT_EQ(out[ContextKind::kCalleeKnowledge].payload, "[A.java:3-5]\nbody");
  ASSERT_TRUE(out[ContextKind::kCalleeKnowledge].locator);
  EXPECT_EQ(out[ContextKind::kCalleeKnowledge].locator->path, "A.java");
  EXPECT_EQ(out[ContextKind::kCalleeKnowledge].kind, ContextKind::kCalleeKnowledge);

  std::map<ContextKind, std::vector<ContextItem>> empty;
  empty[ContextKind::kVariableDataType] = {};
  EXPECT_TRUE(bundle_contexts(empty).empty());
}

namespace {

std::size_t pos_of(const std::string& s, const std::string& needle) {
  auto p = s.find(needle);
  EXPECT_NE(p, std::string::npos) << needle;
  return p;
}

}  // namespace

TEST(LlmUpdater, RequestSectionsAndFenceStripping) {
  auto backend = std::make_shared<llm::MockBackend>();
  backend->push_sequence("```\nfix: widen counter to long\n```");
  llm::ChatClient client(backend);
  LlmUpdater upd(client, {{"diff --git a/X b/X", "feat: example"}}, "fix");

  MessageCandidate cur;
  cur.text = "change a";
  cur.quality[Metric::kRationality] = 2.5;
  ContextItem ctx;
  ctx.kind = ContextKind::kVariableDataType;
  ctx.payload = "a : long";
  UpdateRequest req;
  req.current = &cur;
  req.diff = &tiny_diff();
  req.context = &ctx;
  req.considered = {ContextKind::kCalleeKnowledge};
  req.feedback = cur.quality;
  req.temperature = 1.0;

  auto chat = upd.build_request(req);
  ASSERT_EQ(chat.messages.size(), 2u);
  EXPECT_EQ(chat.messages[0].role, llm::Role::kSystem);
  EXPECT_DOUBLE_EQ(chat.temperature, 1.0);
  const auto& u = chat.messages[1].content;
  std::vector<std::string> sections{"## Task",           "## What a git diff is", "## Expected message format",
                                    "## Similar commits", "## Target git diff",    "## Quality metrics",
                                    "## Commit type",     "## Current commit message",
                                    "## Feedback scores", "## Contexts already considered",
                                    "## New context (VariableDataType)", "## Answer"};
  std::size_t last = 0;
  for (const auto& s : sections) {
    auto p = pos_of(u, s);
    EXPECT_GE(p, last) << s;
    last = p;
  }
  EXPECT_NE(u.find("- CalleeKnowledge"), std::string::npos);
  EXPECT_NE(u.find("a : long"), std::string::npos);
  EXPECT_NE(u.find("2.50"), std::string::npos);
  EXPECT_NE(u.find("feat: example"), std::string::npos);

  EXPECT_EQ(upd.update(req), "fix: widen counter to long");

  backend->push_sequence("   ");
  try {
    upd.update(req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedResponse);
  }

  UpdateRequest incomplete;
  EXPECT_THROW(upd.build_request(incomplete), Error);
}

TEST(InitialMessage, RequiresExemplars) {
  auto backend = std::make_shared<llm::MockBackend>();
  backend->push_sequence("feat: add long counter");
  llm::ChatClient client(backend);
  try {
    generate_initial_message(tiny_diff(), {}, client);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
  }
  EXPECT_EQ(backend->calls(), 0);
  EXPECT_EQ(generate_initial_message(tiny_diff(), {{"d", "m"}}, client), "feat: add long counter");
  auto req = initial_message_request(tiny_diff(), {{"d", "m"}}, PromptOptions{});
  EXPECT_DOUBLE_EQ(req.temperature, 0.0);
  EXPECT_LT(pos_of(req.messages[1].content, "## Similar commits"),
            pos_of(req.messages[1].content, "## Target git diff"));
}
