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

#include <algorithm>
#include <random>

#include "cmo/error.hpp"
#include "cmo/quality.hpp"
#include "fixture_repo.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace cmo {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::kConfig;
}

TEST(Combined, MatchesStraightLineFormula) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> sim(-0.5, 1.0), coeff(0.0, 5.0);
  std::uniform_int_distribution<int> llm(0, 4);
  for (int i = 0; i < 200; ++i) {
    MetricWeights w{coeff(rng), coeff(rng) + 1e-3, i % 5 != 0};
    double s = sim(rng);
    int l = llm(rng);
    EXPECT_NEAR(combined_metric_score(s, l, w), testing::oracle_combined(s, l, w.sim_coeff, w.llm_coeff, w.use_sim),
                1e-12);
  }
}

TEST(Combined, HandValues) {
  EXPECT_DOUBLE_EQ(combined_metric_score(0.5, 3, {0.5, 0.5, true}), 2.5);
  EXPECT_DOUBLE_EQ(combined_metric_score(1.0, 4, {0.5, 0.5, true}), 4.0);
  EXPECT_DOUBLE_EQ(combined_metric_score(-0.3, 2, {1, 1, true}), 1.0);
  EXPECT_DOUBLE_EQ(combined_metric_score(0.9, 2, {1, 3, false}), 2.0);
  EXPECT_DOUBLE_EQ(combined_metric_score(0.25, 0, {1, 0, true}), 1.0);
}

TEST(Combined, Errors) {
  EXPECT_EQ(code_of([] { combined_metric_score(0.5, 5, {}); }), ErrorCode::kPreconditionViolation);
  EXPECT_EQ(code_of([] { combined_metric_score(0.5, -1, {}); }), ErrorCode::kPreconditionViolation);
  EXPECT_EQ(code_of([] { combined_metric_score(0.5, 2, {0, 0, true}); }), ErrorCode::kZeroWeights);
  EXPECT_NO_THROW(combined_metric_score(0.5, 2, {0, 0, false}));
  EvaluatorWeights w;
  EXPECT_TRUE(w.any_sim());
  EXPECT_FALSE(w[Metric::kConciseness].use_sim);
  w[Metric::kRationality] = {0, 0, true};
  EXPECT_EQ(code_of([&] { w.validate(); }), ErrorCode::kZeroWeights);
}

TEST(Metrics, NamesAndParsing) {
  for (auto m : kAllMetrics) {
    EXPECT_EQ(parse_metric(metric_name(m)), m);
    EXPECT_FALSE(metric_definition(m).empty());
  }
  EXPECT_THROW(parse_metric("clarity"), Error);
  EXPECT_EQ(parse_metric_score("3"), 3);
  EXPECT_EQ(parse_metric_score(" 4.\n"), 4);
  EXPECT_EQ(parse_metric_score("2/4"), 2);
  EXPECT_EQ(parse_metric_score("0 / 4"), 0);
  EXPECT_EQ(code_of([] { parse_metric_score("5"); }), ErrorCode::kUnparseableScore);
  EXPECT_EQ(code_of([] { parse_metric_score("three"); }), ErrorCode::kUnparseableScore);
  EXPECT_EQ(code_of([] { parse_metric_score("3 because"); }), ErrorCode::kUnparseableScore);
}

TEST(Scorer, RequestLayoutAndTruncation) {
  bool truncated = false;
  std::string big(100, 'x');
  auto r = scorer_request(Metric::kConciseness, big, "Fix bug", 10, "ft-model", &truncated);
  EXPECT_TRUE(truncated);
  EXPECT_EQ(r.temperature, 0.0);
  EXPECT_EQ(r.model_id, "ft-model");
  ASSERT_EQ(r.messages.size(), 2u);
  const auto& u = r.messages[1].content;
  EXPECT_LT(u.find("## Git diff"), u.find("## Commit message"));
  EXPECT_LT(u.find("## Commit message"), u.find("## Metric"));
  EXPECT_NE(u.find("conciseness"), std::string::npos);
  scorer_request(Metric::kConciseness, "small", "m", 10, "", &truncated);
  EXPECT_FALSE(truncated);
}

CommitDiff small_diff(const std::string& body = "+int x;\n") {
  return parse_unified_diff("--- a/A.java\n+++ b/A.java\n@@ -0,0 +1 @@\n" + body);
}

std::shared_ptr<llm::MockBackend> metric_mock(std::array<int, 4> scores) {
  auto m = std::make_shared<llm::MockBackend>();
  for (auto metric : kAllMetrics) {
    m->add_rule("## Metric\n" + std::string(metric_name(metric)),
                std::to_string(scores[static_cast<std::size_t>(metric)]));
  }
  return m;
}

TEST(Scorer, PerMetricScoresFromBackend) {
  auto m = metric_mock({1, 2, 3, 4});
  llm::ChatClient c(m);
  auto s = llm_metric_scores(small_diff(), "Add x", ScorerSet::uniform(c, "model"));
  EXPECT_EQ(s, (std::array<int, 4>{1, 2, 3, 4}));
  EXPECT_EQ(m->calls(), 4);
}

TEST(Evaluator, CombinesSimAndLlmAndMemoizes) {
  HashEmbedder emb(64);
  CorpusStore store(emb.id(), emb.id(), 64);
  std::vector<std::pair<std::string, std::string>> rows{{"+int x;\n", "Add x field because callers need it"},
                                                        {"+int y;\n", "Add y"},
                                                        {"+foo();\n", "Call foo to fix init"}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CorpusEntry e;
    e.entry_id = "e" + std::to_string(i);
    e.diff_text = rows[i].first;
    e.diff_fingerprint = sha256_hex(rows[i].first);
    e.message_text = rows[i].second;
    e.diff_embedding = emb.embed(rows[i].first);
    e.message_embedding = emb.embed(rows[i].second);
    store.add(e);
  }
  auto m = metric_mock({3, 2, 4, 1});
  llm::ChatClient c(m);
  EvaluatorDeps deps;
  deps.store = &store;
  deps.diff_embedder = &emb;
  deps.text_embedder = &emb;
  deps.k = 2;
  deps.scorers = ScorerSet::uniform(c);
  Evaluator ev(deps);
  auto diff = small_diff();
  const std::string msg = "Add x field";

  // Oracle: top-2 by diff cosine, mean message cosine, then the formula per metric.
  auto q = emb.embed(diff.raw_text);
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < store.size(); ++i) ranked.emplace_back(-cosine(q, store.entries()[i].diff_embedding), i);
  std::sort(ranked.begin(), ranked.end());
  auto cand = emb.embed(msg);
  double sim = (cosine(cand, store.entries()[ranked[0].second].message_embedding) +
                cosine(cand, store.entries()[ranked[1].second].message_embedding)) /
               2;
  double expected = testing::oracle_combined(sim, 3, 0.5, 0.5, true) + testing::oracle_combined(sim, 2, 0.5, 0.5, true) +
                    4.0 + testing::oracle_combined(sim, 1, 0.5, 0.5, true);

  auto r = ev.evaluate(diff, msg);
  EXPECT_NEAR(r.sim, sim, 1e-12);
  EXPECT_NEAR(r.score, expected, 1e-12);
  EXPECT_EQ(r.llm, (std::array<int, 4>{3, 2, 4, 1}));
  EXPECT_DOUBLE_EQ(r.quality.conciseness(), 4.0);
  auto again = ev.evaluate(diff, msg);
  EXPECT_EQ(again.score, r.score);
  EXPECT_EQ(m->calls(), 4);
  EXPECT_EQ(ev.backend_rounds(), 1);
  ev.evaluate(diff, msg + ".");
  EXPECT_EQ(ev.backend_rounds(), 2);
}

TEST(Evaluator, EmptyCorpusFailsWhenSimIsUsed) {
  HashEmbedder emb(16);
  CorpusStore store(emb.id(), emb.id(), 16);
  auto m = metric_mock({1, 1, 1, 1});
  llm::ChatClient c(m);
  EvaluatorDeps deps;
  deps.store = &store;
  deps.diff_embedder = &emb;
  deps.text_embedder = &emb;
  deps.scorers = ScorerSet::uniform(c);
  Evaluator ev(deps);
  EXPECT_EQ(code_of([&] { ev.evaluate(small_diff(), "x"); }), ErrorCode::kEmptyCorpus);

  EvaluatorDeps llm_only = deps;
  for (auto& w : llm_only.weights.per_metric) w.use_sim = false;
  llm_only.store = nullptr;
  Evaluator ev2(llm_only);
  EXPECT_DOUBLE_EQ(ev2.evaluate(small_diff(), "x").score, 4.0);
}

std::vector<LabeledExample> random_examples(std::mt19937_64& rng, const std::array<int, 5>& class_counts) {
  std::vector<LabeledExample> out;
  int id = 0;
  for (int label = 0; label < 5; ++label) {
    for (int k = 0; k < class_counts[label]; ++k) {
      LabeledExample ex;
      ex.diff_text = "+line " + std::to_string(id);
      ex.message_text = "message " + std::to_string(id++);
      for (auto& s : ex.scores) s = static_cast<int>(rng() % 5);
      ex.scores[static_cast<std::size_t>(Metric::kRationality)] = label;
      out.push_back(ex);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

using ExampleKey = std::tuple<std::string, std::string, std::array<int, 4>>;

std::map<ExampleKey, int> multiset(const std::vector<LabeledExample>& v) {
  std::map<ExampleKey, int> m;
  for (const auto& e : v) m[{e.diff_text, e.message_text, e.scores}]++;
  return m;
}

TEST(Finetune, BalancedSupersetAndDeterministic) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    std::array<int, 5> counts{};
    for (auto& c : counts) c = static_cast<int>(rng() % 9);
    if (*std::max_element(counts.begin(), counts.end()) == 0) counts[2] = 3;
    auto input = random_examples(rng, counts);
    auto a = prepare_finetune_dataset(input, Metric::kRationality, 1000 + trial);
    auto b = prepare_finetune_dataset(input, Metric::kRationality, 1000 + trial);
    EXPECT_EQ(a.jsonl, b.jsonl);
    int max_count = *std::max_element(counts.begin(), counts.end());
    std::map<int, int> out_counts;
    for (const auto& e : a.examples) out_counts[e.scores[0]]++;
    for (int label = 0; label < 5; ++label) {
      if (counts[label] > 0) EXPECT_EQ(out_counts[label], max_count);
      else EXPECT_EQ(out_counts.count(label), 0u);
    }
    auto in_ms = multiset(input), out_ms = multiset(a.examples);
    for (const auto& [k, n] : in_ms) EXPECT_GE(out_ms[k], n);
    EXPECT_EQ(std::count(a.jsonl.begin(), a.jsonl.end(), '\n'), static_cast<long>(a.examples.size()));
  }
}

TEST(Finetune, RecordLayout) {
  LabeledExample ex{"+x", "Add x", {1, 2, 3, 4}};
  auto d = prepare_finetune_dataset({ex}, Metric::kExpressiveness, 1);
  auto j = nlohmann::json::parse(d.jsonl);
  ASSERT_EQ(j["messages"].size(), 3u);
  EXPECT_EQ(j["messages"][0]["role"], "system");
  EXPECT_EQ(j["messages"][2]["role"], "assistant");
  EXPECT_EQ(j["messages"][2]["content"], "4");
  EXPECT_EQ(code_of([] { prepare_finetune_dataset({}, Metric::kRationality, 1); }), ErrorCode::kEmptyDataset);
}

TEST(Finetune, UniformIndexStaysInRange) {
  std::mt19937_64 rng(3);
  std::array<int, 7> hist{};
  for (int i = 0; i < 7000; ++i) hist[uniform_index(rng, 7)]++;
  for (int h : hist) EXPECT_GT(h, 800);
  EXPECT_THROW(uniform_index(rng, 0), Error);
}

TEST(ReferenceMetrics, MatchOracleOnFixturePairs) {
  auto j = nlohmann::json::parse(testing::read_file(testing::fixture_dir() / "reference_pairs.json"));
  ASSERT_EQ(j["pairs"].size(), 20u);
  for (const auto& p : j["pairs"]) {
    std::string c = p[0], r = p[1];
    auto got = reference_metrics(c, r);
    EXPECT_NEAR(got.bleu4, testing::oracle_bleu4(c, r), 1e-6) << c << " | " << r;
    EXPECT_NEAR(got.rouge_l_f1, testing::oracle_rouge_l(c, r), 1e-6) << c << " | " << r;
    if (c == r) {
      EXPECT_EQ(got.bleu4, 1.0);
      EXPECT_EQ(got.rouge_l_f1, 1.0);
    }
  }
}

TEST(ReferenceMetrics, HandValues) {
  // "cat sat mat" vs "the cat sat on the mat": p1 = 3/3, p2 = 1/2, p3 = 0 -> BLEU 0.
  auto r = reference_metrics("cat sat mat", "the cat sat on the mat");
  EXPECT_EQ(r.bleu4, 0.0);
  // LCS 3: P = 1, R = 1/2, F1 = 2/3.
  EXPECT_NEAR(r.rouge_l_f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(code_of([] { reference_metrics("   ", "x"); }), ErrorCode::kEmptyAfterTokenization);
}

}  // namespace
}  // namespace cmo
