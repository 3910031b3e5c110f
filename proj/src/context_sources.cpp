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

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <tuple>

#include "cmo/context.hpp"
#include "cmo/error.hpp"
#include "cmo/http.hpp"
#include "cmo/log.hpp"
#include "cmo/text_util.hpp"
#include "json.hpp"

namespace cmo {
namespace {

constexpr const char* kModule = "context_extraction";

std::optional<IssueReport> parse_issue_json(const std::string& text, const std::string& ref) {
  try {
    auto j = nlohmann::json::parse(text);
    IssueReport r;
    r.title = j.value("title", std::string());
    r.body = j.value("body", std::string());
    if (r.title.empty() && r.body.empty()) return std::nullopt;
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kForgeUnreachable, kModule, "malformed issue record for " + ref + ": " + e.what());
  }
}

std::string ref_label(const std::string& ref) {
  return std::all_of(ref.begin(), ref.end(), [](char c) { return c >= '0' && c <= '9'; }) ? "#" + ref : ref;
}

}  // namespace

std::string Summarizer::summarize(std::string_view unit_source, UnitKind kind, std::string_view qualified_name) {
  if (trim(unit_source).empty()) {
    throw Error(ErrorCode::kPreconditionViolation, kModule, "empty unit source for " + std::string(qualified_name));
  }
  const char* noun = kind == UnitKind::kMethod ? "method" : "class";
  std::string system =
      std::string("You summarize Java source code. Describe in at most two sentences what the given ") + noun +
      " does. Reply with the summary only.";
  std::string user = std::string("## ") + (kind == UnitKind::kMethod ? "Method" : "Class") + "\n" +
                     std::string(qualified_name) + "\n\n## Source\n```java\n" +
                     truncate_for_prompt(unit_source, 6000) + "\n```\n";
  try {
    auto resp = client_.chat(llm::make_request(std::move(system), std::move(user), 0.0, "", max_tokens_));
    auto text = trim(resp.content);
    if (text.empty()) {
      throw Error(ErrorCode::kMalformedResponse, "llm_backend", "empty summary");
    }
    return text;
  } catch (const Error& e) {
    throw Error(e.code(), kModule, "summarizing " + std::string(qualified_name) + ": " + e.what());
  }
}

ContextItem summarize_unit(std::string_view unit_source, UnitKind kind, std::string_view qualified_name,
                           Summarizer& summarizer) {
  ContextItem item;
  item.kind = kind == UnitKind::kMethod ? ContextKind::kMethodBodySummary : ContextKind::kClassBodySummary;
  item.payload = std::string(qualified_name) + ": " + summarizer.summarize(unit_source, kind, qualified_name);
  item.provenance = std::string("summarize_unit(") + (kind == UnitKind::kMethod ? "method" : "class") + "=" +
                    std::string(qualified_name) + ")";
  return item;
}

bool is_test_path(std::string_view path) {
  const std::string p = "/" + std::string(path);
  if (p.find("/test/") != std::string::npos || p.find("/tests/") != std::string::npos) return true;
  auto slash = p.rfind('/');
  std::string base = p.substr(slash + 1);
  auto dot = base.rfind('.');
  std::string stem = dot == std::string::npos ? base : base.substr(0, dot);
  auto ends_with = [&](std::string_view suffix) {
    return stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with("Test") || ends_with("Tests") || ends_with("IT") ||
         (stem.size() > 4 && stem.compare(0, 4, "Test") == 0 && std::isupper(static_cast<unsigned char>(stem[4])));
}

ContextItem rank_important_files(const CommitDiff& diff) {
  if (diff.files.empty()) {
    throw Error(ErrorCode::kPreconditionViolation, kModule, "rank_important_files needs at least one file");
  }
  const FileDiff* best = nullptr;
  auto key = [](const FileDiff& f) {
    return std::make_tuple(is_test_path(f.path()), -(f.added_lines() + f.removed_lines()), f.path());
  };
  int total = 0;
  for (const auto& f : diff.files) {
    total += f.added_lines() + f.removed_lines();
    if (best == nullptr || key(f) < key(*best)) best = &f;
  }
  ContextItem item;
  item.kind = ContextKind::kImportantFileInfo;
  item.payload = "Most important file: " + best->path() + "\nReason: " +
                 (is_test_path(best->path()) ? "test" : "production") + " file with the most changed lines (+" +
                 std::to_string(best->added_lines()) + " -" + std::to_string(best->removed_lines()) + ", " +
                 std::string(change_kind_name(best->change_kind)) + "); the commit changes " +
                 std::to_string(total) + " lines in " + std::to_string(diff.files.size()) + " file(s).";
  item.provenance = "rank_important_files(rule=non-test,churn,path)";
  return item;
}

std::optional<IssueReport> FixtureForge::fetch(const std::string& ref) {
  auto path = dir_ / "issues" / (ref + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(dir_, ec)) {
    throw Error(ErrorCode::kForgeUnreachable, kModule, "fixture directory missing: " + dir_.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_issue_json(ss.str(), ref);
}

std::unique_ptr<HttpForge> HttpForge::from_env() {
  const char* url = std::getenv("CMO_FORGE_URL");
  if (url == nullptr || *url == '\0') return nullptr;
  const char* token = std::getenv("CMO_FORGE_TOKEN");
  return std::make_unique<HttpForge>(url, token == nullptr ? "" : token);
}

std::optional<IssueReport> HttpForge::fetch(const std::string& ref) {
  http::Request req;
  std::string base = base_;
  while (!base.empty() && base.back() == '/') base.pop_back();
  req.url = base + "/issues/" + ref;
  req.timeout = std::chrono::milliseconds(15000);
  if (!token_.empty()) req.headers["Authorization"] = "Bearer " + token_;
  http::Response resp;
  try {
    resp = http::get(req);
  } catch (const Error& e) {
    throw Error(ErrorCode::kForgeUnreachable, kModule, e.what());
  }
  if (resp.status == 404) return std::nullopt;
  if (resp.status != 200) {
    throw Error(ErrorCode::kForgeUnreachable, kModule, "forge returned HTTP " + std::to_string(resp.status));
  }
  return parse_issue_json(resp.body, ref);
}

std::vector<std::string> find_issue_refs(std::string_view text) {
  static const std::regex re(R"((?:^|[^&\w])#(\d+)\b|\b([A-Z]+-\d+)\b)");
  std::vector<std::string> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    std::string ref = (*it)[1].matched ? (*it)[1].str() : (*it)[2].str();
    if (std::find(out.begin(), out.end(), ref) == out.end()) out.push_back(ref);
  }
  return out;
}

std::optional<ContextItem> link_issue_or_pr(std::string_view message, const CommitDiff& diff, ForgeClient* forge,
                                            std::size_t byte_budget) {
  std::string text(message);
  for (const auto& fd : diff.files) {
    for (const auto& h : fd.hunks) {
      for (const auto& l : h.lines) {
        if (l.tag == LineTag::kAdded) text += "\n" + l.text;
      }
    }
  }
  auto refs = find_issue_refs(text);
  if (refs.empty() || forge == nullptr) return std::nullopt;
  std::string payload;
  std::string resolved;
  for (const auto& ref : refs) {
    std::optional<IssueReport> report;
    try {
      report = forge->fetch(ref);
    } catch (const Error& e) {
      log::warn(kModule, std::string("ForgeUnreachable: ") + e.what());
      return std::nullopt;
    }
    if (!report) continue;
    if (!payload.empty()) payload += "\n\n";
    payload += ref_label(ref) + ": " + report->title;
    if (!report->body.empty()) payload += "\n" + report->body;
    resolved += (resolved.empty() ? "" : ",") + ref_label(ref);
  }
  if (payload.empty()) return std::nullopt;
  ContextItem item;
  item.kind = ContextKind::kPullRequestIssueReport;
  bool cut = payload.size() > byte_budget;
  item.payload = truncate_utf8(payload, byte_budget);
  item.provenance = "issue_link(refs=" + resolved + (cut ? ", truncated" : "") + ")";
  return item;
}

std::optional<std::string> parse_commit_label(std::string_view response, const std::vector<std::string>& taxonomy) {
  const std::string lower = to_lower(trim(response));
  for (const auto& t : taxonomy) {
    if (lower == to_lower(t)) return t;
  }
  std::optional<std::string> found;
  auto words = tokenize_words(lower);
  for (const auto& t : taxonomy) {
    if (std::find(words.begin(), words.end(), to_lower(t)) != words.end()) {
      if (found) return std::nullopt;  // ambiguous
      found = t;
    }
  }
  return found;
}

CommitType classify_commit_type(const CommitDiff& diff, std::string_view initial_message, llm::ChatClient& client,
                                const std::vector<std::string>& taxonomy, int diff_token_budget) {
  if (diff.files.empty()) throw Error(ErrorCode::kPreconditionViolation, kModule, "empty diff");
  std::string labels;
  for (const auto& t : taxonomy) labels += (labels.empty() ? "" : ", ") + t;
  std::string system = "You classify software commits by maintenance activity. Answer with exactly one label from: " +
                       labels + ".";
  std::string user = "## Git diff\n```diff\n" + truncate_for_prompt(diff.raw_text, diff_token_budget) + "\n```\n";
  if (!trim(initial_message).empty()) {
    user += "\n## Commit message\n" + std::string(initial_message) + "\n";
  }
  user += "\n## Answer\nOne of: " + labels + "\n";
  std::string last;
  for (double temperature : {0.0, 1.0}) {
    auto resp = client.chat(llm::make_request(system, user, temperature, "", 16));
    last = resp.content;
    if (auto label = parse_commit_label(resp.content, taxonomy)) return {*label, resp.content};
  }
  throw Error(ErrorCode::kUnparseableLabel, kModule, "commit type answer matches no label: '" + trim(last) + "'");
}

}  // namespace cmo
