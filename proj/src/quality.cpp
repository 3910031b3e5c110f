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

#include "cmo/quality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>

#include "cmo/error.hpp"
#include "cmo/text_util.hpp"
#include "json.hpp"

namespace cmo {
namespace {

constexpr const char* kModule = "quality_eval";
using nlohmann::json;
using nlohmann::ordered_json;

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kRationality: return "rationality";
    case Metric::kComprehensiveness: return "comprehensiveness";
    case Metric::kConciseness: return "conciseness";
    case Metric::kExpressiveness: return "expressiveness";
  }
  return "?";
}

Metric parse_metric(std::string_view name) {
  const auto n = to_lower(trim(name));
  for (auto m : kAllMetrics) {
    if (metric_name(m) == n) return m;
  }
  throw Error(ErrorCode::kConfig, kModule, "unknown metric '" + std::string(name) + "'");
}

std::string_view metric_definition(Metric m) {
  switch (m) {
    case Metric::kRationality:
      return "Rationality: the message states the motivation for the change, such as the problem it solves or the "
             "goal it serves. 0 = no reason given; 2 = a vague or partial reason; 4 = a clear, specific reason "
             "consistent with the diff.";
    case Metric::kComprehensiveness:
      return "Comprehensiveness: the message summarizes what the code change does and covers its important parts. "
             "0 = unrelated or empty summary; 2 = covers some of the change; 4 = accurately covers every important "
             "part of the change.";
    case Metric::kConciseness:
      return "Conciseness: the message carries its information without redundant, repeated or irrelevant text. "
             "0 = mostly filler; 2 = noticeable padding; 4 = every sentence is necessary.";
    case Metric::kExpressiveness:
      return "Expressiveness: the message is grammatical, fluent and easy to read. 0 = unreadable; 2 = "
             "understandable with errors; 4 = well written.";
  }
  return "";
}

double QualityVector::optimization_score() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

bool EvaluatorWeights::any_sim() const {
  return std::any_of(per_metric.begin(), per_metric.end(), [](const MetricWeights& w) { return w.use_sim; });
}

void EvaluatorWeights::validate() const {
  for (auto m : kAllMetrics) {
    const auto& w = (*this)[m];
    if (w.sim_coeff < 0 || w.llm_coeff < 0 || !std::isfinite(w.sim_coeff) || !std::isfinite(w.llm_coeff)) {
      throw Error(ErrorCode::kConfig, kModule, "negative or non-finite coefficient for " + std::string(metric_name(m)));
    }
    if (w.use_sim && w.sim_coeff + w.llm_coeff <= 0) {
      throw Error(ErrorCode::kZeroWeights, kModule, "both coefficients are zero for " + std::string(metric_name(m)));
    }
  }
}

double combined_metric_score(double sim, int llm, const MetricWeights& w) {
  if (llm < 0 || llm > 4) {
    throw Error(ErrorCode::kPreconditionViolation, kModule, "llm score out of range: " + std::to_string(llm));
  }
  if (!w.use_sim) return static_cast<double>(llm);
  const double total = w.sim_coeff + w.llm_coeff;
  if (!(total > 0)) throw Error(ErrorCode::kZeroWeights, kModule, "sim_coeff + llm_coeff must be positive");
  const double s = std::clamp(sim, 0.0, 1.0);
  const double v = s * 4.0 * (w.sim_coeff / total) + static_cast<double>(llm) * (w.llm_coeff / total);
  return std::clamp(v, 0.0, 4.0);
}

llm::ChatRequest scorer_request(Metric m, std::string_view diff_text, std::string_view message, int diff_token_budget,
                                const std::string& model_id, bool* truncated) {
  std::string system = "You rate commit messages on one quality metric using an integer from 0 to 4.\n\n" +
                       std::string(metric_definition(m)) + "\n\nReply with the integer only.";
  std::string user = "## Git diff\n```diff\n" + truncate_for_prompt(diff_text, diff_token_budget, truncated) +
                     "\n```\n\n## Commit message\n" + std::string(message) + "\n\n## Metric\n" +
                     std::string(metric_name(m)) + "\n";
  return llm::make_request(std::move(system), std::move(user), 0.0, model_id, 8);
}

int parse_metric_score(std::string_view response) {
  static const std::regex re(R"(^([0-9]+)(\s*/\s*4)?\.?$)");
  const auto text = trim(response);
  std::smatch m;
  if (!std::regex_match(text, m, re) || m[1].length() > 2) {
    throw Error(ErrorCode::kUnparseableScore, kModule, "not a score: '" + text + "'");
  }
  int v = std::stoi(m[1].str());
  if (v > 4) throw Error(ErrorCode::kUnparseableScore, kModule, "score out of range: " + text);
  return v;
}

ScorerSet ScorerSet::uniform(llm::ChatClient& client, const std::string& model_id) {
  ScorerSet s;
  s.clients.fill(&client);
  s.model_ids.fill(model_id);
  return s;
}

std::array<int, 4> llm_metric_scores(const CommitDiff& diff, std::string_view message, const ScorerSet& scorers,
                                     bool* truncated) {
  std::array<int, 4> out{};
  bool cut = false;
  for (auto m : kAllMetrics) {
    const auto i = static_cast<std::size_t>(m);
    if (scorers.clients[i] == nullptr) {
      throw Error(ErrorCode::kPreconditionViolation, kModule, "no scorer for " + std::string(metric_name(m)));
    }
    auto req = scorer_request(m, diff.raw_text, message, scorers.diff_token_budget, scorers.model_ids[i], &cut);
    auto resp = scorers.clients[i]->chat(req);
    try {
      out[i] = parse_metric_score(resp.content);
    } catch (const Error& e) {
      throw Error(e.code(), kModule, std::string(metric_name(m)) + ": " + e.what());
    }
  }
  if (truncated != nullptr) *truncated = cut;
  return out;
}

Evaluator::Evaluator(EvaluatorDeps deps) : deps_(std::move(deps)) { deps_.weights.validate(); }

std::vector<Neighbor> Evaluator::retrieve(const CommitDiff& diff) {
  if (deps_.store == nullptr || deps_.store->empty()) {
    throw Error(ErrorCode::kEmptyCorpus, kModule, "retrieval needs a non-empty corpus");
  }
  if (deps_.diff_embedder == nullptr) throw Error(ErrorCode::kConfig, kModule, "no diff embedder configured");
  const auto key = diff_fingerprint(diff);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = retrieval_memo_.find(key);
    if (it != retrieval_memo_.end()) return it->second;
  }
  auto result = query_similar(diff, *deps_.store, *deps_.diff_embedder, deps_.k);
  std::lock_guard<std::mutex> lock(mu_);
  retrieval_memo_[key] = result;
  return result;
}

Evaluation Evaluator::evaluate(const CommitDiff& diff, const std::string& message) {
  const auto key = std::make_pair(diff_fingerprint(diff), Digest256::of(message));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  Evaluation ev;
  if (deps_.weights.any_sim()) {
    if (deps_.text_embedder == nullptr) throw Error(ErrorCode::kConfig, kModule, "no text embedder configured");
    auto neighbors = retrieve(diff);
    std::vector<const CorpusEntry*> entries;
    for (const auto& n : neighbors) entries.push_back(n.entry);
    ev.sim = sim_score(message, entries, *deps_.text_embedder);
  }
  ++rounds_;
  ev.llm = llm_metric_scores(diff, message, deps_.scorers, &ev.diff_truncated);
  for (auto m : kAllMetrics) {
    ev.quality[m] = combined_metric_score(ev.sim, ev.llm[static_cast<std::size_t>(m)], deps_.weights[m]);
  }
  ev.score = ev.quality.optimization_score();
  std::lock_guard<std::mutex> lock(mu_);
  memo_[key] = ev;
  return ev;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kPreconditionViolation, kModule, "uniform_index over an empty range");
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return static_cast<std::size_t>(r % range);
}

FinetuneDataset prepare_finetune_dataset(const std::vector<LabeledExample>& examples, Metric metric,
                                         std::uint64_t seed, int diff_token_budget) {
  if (examples.empty()) throw Error(ErrorCode::kEmptyDataset, kModule, "no labeled examples");
  const auto mi = static_cast<std::size_t>(metric);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    for (int s : examples[i].scores) {
      if (s < 0 || s > 4) {
        throw Error(ErrorCode::kPreconditionViolation, kModule,
                    "example " + std::to_string(i + 1) + " has a score outside 0..4");
      }
    }
    by_class[examples[i].scores[mi]].push_back(i);
  }
  std::size_t max_count = 0;
  for (const auto& [label, idx] : by_class) max_count = std::max(max_count, idx.size());

  std::mt19937_64 rng(seed);
  FinetuneDataset out;
  for (const auto& [label, idx] : by_class) {
    for (auto i : idx) out.examples.push_back(examples[i]);
    for (std::size_t k = idx.size(); k < max_count; ++k) out.examples.push_back(examples[idx[uniform_index(rng, idx.size())]]);
  }
  for (std::size_t i = out.examples.size(); i > 1; --i) {
    std::swap(out.examples[i - 1], out.examples[uniform_index(rng, i)]);
  }
  for (const auto& ex : out.examples) {
    auto req = scorer_request(metric, ex.diff_text, ex.message_text, diff_token_budget, "");
    ordered_json messages = ordered_json::array();
    for (const auto& m : req.messages) {
      messages.push_back({{"role", std::string(llm::role_name(m.role))}, {"content", m.content}});
    }
    messages.push_back({{"role", "assistant"}, {"content", std::to_string(ex.scores[mi])}});
    out.jsonl += ordered_json{{"messages", messages}}.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

std::vector<LabeledExample> read_labeled_examples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot read " + path.string());
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      LabeledExample ex;
      ex.diff_text = j.at("diff").get<std::string>();
      ex.message_text = j.at("message").get<std::string>();
      for (auto m : kAllMetrics) ex.scores[static_cast<std::size_t>(m)] = j.at("scores").at(std::string(metric_name(m))).get<int>();
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kPreconditionViolation, kModule, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ReferenceScores reference_metrics(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize_words(candidate);
  const auto r = tokenize_words(reference);
  if (c.empty() || r.empty()) {
    throw Error(ErrorCode::kEmptyAfterTokenization, kModule, "candidate or reference has no tokens");
  }
  ReferenceScores out;

  const std::size_t max_n = std::min<std::size_t>(4, c.size());
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= max_n; ++n) {
    std::map<std::vector<std::string>, int> ref_counts;
    for (std::size_t i = 0; i + n <= r.size(); ++i) ++ref_counts[std::vector<std::string>(r.begin() + i, r.begin() + i + n)];
    std::map<std::vector<std::string>, int> cand_counts;
    for (std::size_t i = 0; i + n <= c.size(); ++i) ++cand_counts[std::vector<std::string>(c.begin() + i, c.begin() + i + n)];
    int clipped = 0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) clipped += std::min(count, it->second);
    }
    const auto total = static_cast<double>(c.size() - n + 1);
    if (clipped == 0) {
      zero = true;
      break;
    }
    log_sum += std::log(clipped / total);
  }
  if (!zero) {
    const double bp = c.size() > r.size() ? 1.0 : std::exp(1.0 - static_cast<double>(r.size()) / c.size());
    out.bleu4 = std::clamp(bp * std::exp(log_sum / static_cast<double>(max_n)), 0.0, 1.0);
  }

  std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (std::size_t i = 1; i <= c.size(); ++i) {
    for (std::size_t j = 1; j <= r.size(); ++j) {
      cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[r.size()]);
  if (lcs > 0) {
    const double p = lcs / c.size();
    const double rec = lcs / r.size();
    out.rouge_l_f1 = 2 * p * rec / (p + rec);
  }
  return out;
}

}  // namespace cmo
