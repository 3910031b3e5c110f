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

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cmo/diff_model.hpp"
#include "cmo/llm.hpp"

namespace cmo {

// A vector with Euclidean norm 1 (within 1e-6).
class UnitVector {
 public:
  UnitVector() = default;
  // Scales `v` to unit length. Throws Error(kPreconditionViolation) for a zero
  // or non-finite vector.
  static UnitVector normalize(std::vector<double> v);
  // Takes already-normalized components verbatim; throws Error(kCorpusFormat)
  // if the norm is off by more than 1e-6.
  static UnitVector from_stored(std::vector<double> v);

  std::size_t dim() const { return c_.size(); }
  const std::vector<double>& components() const { return c_; }
  double norm() const;

 private:
  explicit UnitVector(std::vector<double> c) : c_(std::move(c)) {}
  std::vector<double> c_;
};

// Dot product, clamped to [-1, 1]. Throws Error(kEmbedderMismatch) on a dim mismatch.
double cosine(const UnitVector& a, const UnitVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  // Thread-safe.
  virtual UnitVector embed(std::string_view text) const = 0;
};

// Signed feature hashing of lowercased word tokens (FNV-1a, 64 bit). The last
// bucket is reserved for text without tokens.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 256);
  std::string id() const override { return "hash-" + std::to_string(dim_); }
  std::size_t dim() const override { return dim_; }
  UnitVector embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

// POST <base>/embeddings {"model", "input"}; reads data[0].embedding.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(std::string base_url, std::string api_key, std::string model, std::size_t dim);
  std::string id() const override { return "http:" + model_; }
  std::size_t dim() const override { return dim_; }
  UnitVector embed(std::string_view text) const override;

 private:
  std::string base_;
  std::string key_;
  std::string model_;
  std::size_t dim_;
};

// "hash-<dim>" or "http:<model>" (the latter reads CMO_LLM_BASE_URL/CMO_LLM_API_KEY).
std::unique_ptr<Embedder> make_embedder(const std::string& id, std::size_t http_dim = 1536);

struct CommitMeta {
  std::string repo;
  std::string commit_id;
  std::string timestamp;
};

struct CorpusEntry {
  std::string entry_id;
  std::string diff_text;
  std::string diff_fingerprint;  // sha256 hex of diff_text
  UnitVector diff_embedding;
  std::string message_text;
  UnitVector message_embedding;
  CommitMeta meta;
};

class CorpusStore {
 public:
  CorpusStore(std::string diff_embedder, std::string text_embedder, std::size_t dim);

  const std::string& diff_embedder_id() const { return diff_embedder_; }
  const std::string& text_embedder_id() const { return text_embedder_; }
  std::size_t dim() const { return dim_; }
  const std::vector<CorpusEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Throws Error(kEmbedderMismatch) when an embedding has the wrong dim.
  void add(CorpusEntry entry);

  // JSON lines: a header record, then one record per entry. Throws Error(kIo).
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  // Throws Error(kIo) or Error(kCorpusFormat).
  static CorpusStore load(const std::filesystem::path& path);
  static CorpusStore parse(std::string_view text);

  // Throws Error(kEmbedderMismatch) unless the ids and dim match.
  void check_embedders(const Embedder& diff_embedder, const Embedder& text_embedder) const;

 private:
  std::string diff_embedder_;
  std::string text_embedder_;
  std::size_t dim_;
  std::vector<CorpusEntry> entries_;
};

struct RetrievalConfig {
  int k = 10;
  std::string diff_embedder = "hash-256";
  std::string text_embedder = "hash-256";
};

struct Neighbor {
  const CorpusEntry* entry = nullptr;
  double cosine = 0.0;
};

// Exhaustive scan: the k most similar entries by diff embedding, descending,
// ties by entry_id ascending. k is clamped to the corpus size with a warning.
std::vector<Neighbor> query_similar(const UnitVector& query, const CorpusStore& store, int k);
std::vector<Neighbor> query_similar(const CommitDiff& target, const CorpusStore& store, const Embedder& diff_embedder,
                                    int k);

// Mean cosine between the candidate and each retrieved message embedding.
double sim_score(std::string_view candidate_message, const std::vector<const CorpusEntry*>& retrieved,
                 const Embedder& text_embedder);
double sim_score(const UnitVector& candidate, const std::vector<const CorpusEntry*>& retrieved);

struct WhatWhy {
  bool what = false;
  bool why = false;
  bool fallback = false;  // rules were used because the backend failed
};

WhatWhy classify_what_why_rules(std::string_view message);

class WhatWhyClassifier {
 public:
  virtual ~WhatWhyClassifier() = default;
  virtual WhatWhy classify(std::string_view message) = 0;
};

class RuleWhatWhyClassifier : public WhatWhyClassifier {
 public:
  WhatWhy classify(std::string_view message) override { return classify_what_why_rules(message); }
};

// Asks the chat backend for {"what": bool, "why": bool}; rules on any failure.
class LlmWhatWhyClassifier : public WhatWhyClassifier {
 public:
  explicit LlmWhatWhyClassifier(llm::ChatClient& client) : client_(client) {}
  WhatWhy classify(std::string_view message) override;

 private:
  llm::ChatClient& client_;
};

struct CorpusInput {
  std::string diff_text;
  std::string message;
  CommitMeta meta;
};

// One JSON object per line: {"diff", "message", "repo"?, "commit_id"?, "timestamp"?}.
std::vector<CorpusInput> read_corpus_inputs(const std::filesystem::path& path);

struct BuildStats {
  std::size_t inputs = 0;
  std::size_t kept = 0;
  std::size_t filtered = 0;
  std::size_t failed = 0;
};

// Keeps inputs classified {what, why}; writes the corpus to `out_path` when it
// is non-empty. `jobs` > 1 classifies and embeds in parallel.
CorpusStore build_corpus(const std::vector<CorpusInput>& inputs, const Embedder& diff_embedder,
                         const Embedder& text_embedder, WhatWhyClassifier& classifier,
                         const std::filesystem::path& out_path, int jobs = 1, BuildStats* stats = nullptr);

}  // namespace cmo
