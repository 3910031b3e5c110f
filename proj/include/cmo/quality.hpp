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
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cmo/diff_model.hpp"
#include "cmo/llm.hpp"
#include "cmo/retrieval.hpp"

namespace cmo {

enum class Metric { kRationality, kComprehensiveness, kConciseness, kExpressiveness };

inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::kRationality, Metric::kComprehensiveness,
                                                      Metric::kConciseness, Metric::kExpressiveness};

std::string_view metric_name(Metric m);  // lowercase, e.g. "rationality"
Metric parse_metric(std::string_view name);
// One-paragraph definition with the 0-4 scale, shared by scorer and updater prompts.
std::string_view metric_definition(Metric m);

struct QualityVector {
  std::array<double, 4> values{};  // indexed by Metric

  double& operator[](Metric m) { return values[static_cast<std::size_t>(m)]; }
  double operator[](Metric m) const { return values[static_cast<std::size_t>(m)]; }
  double rationality() const { return (*this)[Metric::kRationality]; }
  double comprehensiveness() const { return (*this)[Metric::kComprehensiveness]; }
  double conciseness() const { return (*this)[Metric::kConciseness]; }
  double expressiveness() const { return (*this)[Metric::kExpressiveness]; }
  // Sum of the four components, in [0, 16].
  double optimization_score() const;
  friend bool operator==(const QualityVector&, const QualityVector&) = default;
};

struct MetricWeights {
  double sim_coeff = 0.5;
  double llm_coeff = 0.5;
  bool use_sim = true;
};

struct EvaluatorWeights {
  // Conciseness relies on the LLM score alone by default.
  std::array<MetricWeights, 4> per_metric = {MetricWeights{}, MetricWeights{}, MetricWeights{0.5, 0.5, false},
                                             MetricWeights{}};

  MetricWeights& operator[](Metric m) { return per_metric[static_cast<std::size_t>(m)]; }
  const MetricWeights& operator[](Metric m) const { return per_metric[static_cast<std::size_t>(m)]; }
  bool any_sim() const;
  // Throws Error(kZeroWeights) or Error(kConfig) for invalid coefficients.
  void validate() const;
};

// max(sim, 0) * 4 * sc / (sc + lc) + llm * lc / (sc + lc) when use_sim, else llm.
double combined_metric_score(double sim, int llm, const MetricWeights& w);

struct LabeledExample {
  std::string diff_text;
  std::string message_text;
  std::array<int, 4> scores{};  // indexed by Metric, each in 0..4
};

// Chat prompt asking for one metric's 0-4 score; also the fine-tuning prompt.
llm::ChatRequest scorer_request(Metric m, std::string_view diff_text, std::string_view message, int diff_token_budget,
                                const std::string& model_id, bool* truncated = nullptr);
// Accepts "3", "3.", "3/4"; throws Error(kUnparseableScore) otherwise or when out of range.
int parse_metric_score(std::string_view response);

struct ScorerSet {
  // One chat client and model id per metric; clients may be shared.
  std::array<llm::ChatClient*, 4> clients{};
  std::array<std::string, 4> model_ids{};
  int diff_token_budget = 6000;

  static ScorerSet uniform(llm::ChatClient& client, const std::string& model_id = "");
};

std::array<int, 4> llm_metric_scores(const CommitDiff& diff, std::string_view message, const ScorerSet& scorers,
                                     bool* truncated = nullptr);

struct Evaluation {
  QualityVector quality;
  double score = 0.0;
  std::array<int, 4> llm{};
  double sim = 0.0;
  bool diff_truncated = false;
};

class CandidateEvaluator {
 public:
  virtual ~CandidateEvaluator() = default;
  virtual Evaluation evaluate(const CommitDiff& diff, const std::string& message) = 0;
};

struct EvaluatorDeps {
  const CorpusStore* store = nullptr;
  const Embedder* diff_embedder = nullptr;
  const Embedder* text_embedder = nullptr;
  int k = 10;
  ScorerSet scorers;
  EvaluatorWeights weights;
};

// Retrieval-augmented evaluator, memoized by (diff fingerprint, message digest).
class Evaluator : public CandidateEvaluator {
 public:
  explicit Evaluator(EvaluatorDeps deps);
  Evaluation evaluate(const CommitDiff& diff, const std::string& message) override;
  // Top-k neighbours for a diff, memoized by fingerprint.
  std::vector<Neighbor> retrieve(const CommitDiff& diff);
  // Number of evaluations that reached the scoring backends.
  int backend_rounds() const { return rounds_.load(); }

 private:
  EvaluatorDeps deps_;
  std::mutex mu_;
  std::map<std::pair<Digest256, Digest256>, Evaluation> memo_;
  std::map<Digest256, std::vector<Neighbor>> retrieval_memo_;
  std::atomic<int> rounds_{0};
};

struct FinetuneDataset {
  std::vector<LabeledExample> examples;  // balanced and shuffled
  std::string jsonl;                     // one chat record per example
};

// Random oversampling of every label class up to the largest class, seeded.
FinetuneDataset prepare_finetune_dataset(const std::vector<LabeledExample>& examples, Metric metric,
                                         std::uint64_t seed, int diff_token_budget = 6000);
// Reads {"diff", "message", "scores": {metric: int}} records.
std::vector<LabeledExample> read_labeled_examples(const std::filesystem::path& path);

// Uniform integer in [0, n) by rejection sampling on mt19937_64.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

struct ReferenceScores {
  double bleu4 = 0.0;
  double rouge_l_f1 = 0.0;
};

// BLEU-4 uses n-gram orders up to min(4, candidate length), uniform weights,
// brevity penalty, no smoothing. Throws Error(kEmptyAfterTokenization).
ReferenceScores reference_metrics(std::string_view candidate, std::string_view reference);

}  // namespace cmo
