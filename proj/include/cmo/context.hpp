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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cmo/diff_model.hpp"
#include "cmo/llm.hpp"
#include "cmo/source_index.hpp"

namespace cmo {

enum class ContextKind {
  kImportantFileInfo,
  kCommitType,
  kPullRequestIssueReport,
  kMethodBodySummary,
  kClassBodySummary,
  kEnclosingCodeBlock,
  kCalleeKnowledge,
  kVariableDataType,
};

inline constexpr std::array<ContextKind, 8> kAllContextKinds = {
    ContextKind::kImportantFileInfo,  ContextKind::kCommitType,         ContextKind::kPullRequestIssueReport,
    ContextKind::kMethodBodySummary,  ContextKind::kClassBodySummary,   ContextKind::kEnclosingCodeBlock,
    ContextKind::kCalleeKnowledge,    ContextKind::kVariableDataType};

// Every kind except CommitType, in default injection order.
inline constexpr std::array<ContextKind, 7> kInjectableKinds = {
    ContextKind::kImportantFileInfo, ContextKind::kPullRequestIssueReport, ContextKind::kMethodBodySummary,
    ContextKind::kClassBodySummary,  ContextKind::kEnclosingCodeBlock,     ContextKind::kCalleeKnowledge,
    ContextKind::kVariableDataType};

std::string_view context_kind_name(ContextKind kind);
// Accepts the exact kind name, case-insensitively. Throws Error(kConfig).
ContextKind parse_context_kind(std::string_view name);
bool is_injectable(ContextKind kind);
bool is_code_anchored(ContextKind kind);

struct Locator {
  std::string path;
  Side side = Side::kPost;
  LineSpan span;
  friend bool operator==(const Locator&, const Locator&) = default;
};

struct ContextItem {
  ContextKind kind = ContextKind::kImportantFileInfo;
  std::string payload;
  std::optional<Locator> locator;
  std::string provenance;  // extractor name and parameters
};

// A changed region: a maximal run of changed lines in one hunk, on the post
// side, or on the pre side when the run only removes lines.
struct ChangeRegion {
  std::string path;
  Side side = Side::kPost;
  LineSpan span;
};

std::vector<ChangeRegion> change_regions(const CommitDiff& diff);
// Changed line numbers of `path` on `side` (added lines for post, removed for pre).
std::set<int> changed_lines(const CommitDiff& diff, std::string_view path, Side side);

std::vector<ContextItem> extract_enclosing_blocks(const CommitDiff& diff, const ProjectIndex& index);

enum class UnitKind { kMethod, kClass };

// Summaries through the chat backend, cached by the client at temperature 0.
class Summarizer {
 public:
  explicit Summarizer(llm::ChatClient& client, int max_tokens = 256) : client_(client), max_tokens_(max_tokens) {}
  // Backend errors propagate as Error with the unit name in the message.
  std::string summarize(std::string_view unit_source, UnitKind kind, std::string_view qualified_name);

 private:
  llm::ChatClient& client_;
  int max_tokens_;
};

// Payload is "<qualified name>: <summary>".
ContextItem summarize_unit(std::string_view unit_source, UnitKind kind, std::string_view qualified_name,
                           Summarizer& summarizer);

// `summarizer` may be null: payloads are then raw bodies, flagged in provenance.
std::vector<ContextItem> extract_callee_knowledge(const CommitDiff& diff, const ProjectIndex& index,
                                                  Summarizer* summarizer);

std::vector<ContextItem> extract_variable_types(const CommitDiff& diff, const ProjectIndex& index);

// Method and class summaries for the units enclosing each change. Without a
// summarizer (or when it fails) the payload is the unit's signature outline.
std::vector<ContextItem> extract_unit_summaries(const CommitDiff& diff, const ProjectIndex& index,
                                                Summarizer* summarizer);

bool is_test_path(std::string_view path);
ContextItem rank_important_files(const CommitDiff& diff);

struct IssueReport {
  std::string title;
  std::string body;
};

class ForgeClient {
 public:
  virtual ~ForgeClient() = default;
  // `ref` is "42" for #42 or "PROJ-7". Absent when the forge has no such item.
  // Throws Error(kForgeUnreachable) on transport failure.
  virtual std::optional<IssueReport> fetch(const std::string& ref) = 0;
};

// Reads <dir>/issues/<ref>.json with {title, body}.
class FixtureForge : public ForgeClient {
 public:
  explicit FixtureForge(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::optional<IssueReport> fetch(const std::string& ref) override;

 private:
  std::filesystem::path dir_;
};

// GET <base>/issues/<ref> with an optional token.
class HttpForge : public ForgeClient {
 public:
  HttpForge(std::string base_url, std::string token) : base_(std::move(base_url)), token_(std::move(token)) {}
  // CMO_FORGE_URL / CMO_FORGE_TOKEN; null when the URL is unset.
  static std::unique_ptr<HttpForge> from_env();
  std::optional<IssueReport> fetch(const std::string& ref) override;

 private:
  std::string base_;
  std::string token_;
};

// Issue references in order of first appearance: "42" for #42, "PROJ-7".
std::vector<std::string> find_issue_refs(std::string_view text);

std::optional<ContextItem> link_issue_or_pr(std::string_view message, const CommitDiff& diff, ForgeClient* forge,
                                            std::size_t byte_budget);

struct CommitType {
  std::string label;
  std::string raw_response;
};

inline const std::vector<std::string>& default_commit_taxonomy() {
  static const std::vector<std::string> t = {"corrective", "perfective", "adaptive"};
  return t;
}

// Throws Error(kUnparseableLabel) when the answer names no taxonomy member,
// after one retry at temperature 1.0.
CommitType classify_commit_type(const CommitDiff& diff, std::string_view initial_message, llm::ChatClient& client,
                                const std::vector<std::string>& taxonomy = default_commit_taxonomy(),
                                int diff_token_budget = 6000);
// Parses a label from a classifier answer, or nullopt.
std::optional<std::string> parse_commit_label(std::string_view response, const std::vector<std::string>& taxonomy);

struct ExtractionOptions {
  Summarizer* summarizer = nullptr;
  ForgeClient* forge = nullptr;
  std::size_t issue_byte_budget = 2048;
};

// All extractable contexts for a commit, keyed by kind (CommitType excluded).
std::map<ContextKind, std::vector<ContextItem>> collect_contexts(const CommitDiff& diff, const ProjectIndex& index,
                                                                 std::string_view message,
                                                                 const ExtractionOptions& opts);

}  // namespace cmo
