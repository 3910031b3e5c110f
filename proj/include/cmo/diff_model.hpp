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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cmo/digest.hpp"

namespace cmo {

enum class LineTag : char { kContext = ' ', kAdded = '+', kRemoved = '-' };

struct DiffLine {
  LineTag tag = LineTag::kContext;
  std::string text;
  // The line was followed by "\ No newline at end of file" (verbatim marker).
  std::optional<std::string> eof_marker;
  // An empty context line whose leading space was stripped by a mail/editor.
  bool bare = false;
};

struct Hunk {
  int old_start = 0;
  int old_len = 0;
  int new_start = 0;
  int new_len = 0;
  // The verbatim "@@ ... @@ section" line.
  std::string header;
  std::vector<DiffLine> lines;

  int count(LineTag tag) const;
};

enum class ChangeKind { kAdded, kDeleted, kModified, kRenamed };

std::string_view change_kind_name(ChangeKind kind);

struct FileDiff {
  std::optional<std::string> old_path;
  std::optional<std::string> new_path;
  ChangeKind change_kind = ChangeKind::kModified;
  bool binary = false;
  // Everything between the section start and the first hunk, verbatim
  // ("diff --git", index, mode, rename, ---/+++ and binary marker lines).
  std::vector<std::string> header_lines;
  std::vector<Hunk> hunks;

  // new_path when present, otherwise old_path.
  const std::string& path() const;
  int added_lines() const;
  int removed_lines() const;
};

class CommitDiff {
 public:
  std::string repo_id;
  std::string commit_id;
  // Lines preceding the first file section (e.g. a commit header), verbatim.
  std::vector<std::string> preamble;
  std::vector<FileDiff> files;
  // Unrecognised lines after the last hunk, verbatim.
  std::vector<std::string> trailer;
  bool final_newline = true;
  std::string raw_text;

  const FileDiff* find_file(std::string_view path) const;
  bool has_text_hunks() const;
};

// Parses unified diff text (git or plain "---/+++" style).
// Throws Error(kEmptyDiff) when there is no file section and
// Error(kMalformedDiff) when hunk arithmetic disagrees with the body.
CommitDiff parse_unified_diff(std::string_view text);

// Re-emits the structured form; equals raw_text for anything the parser accepted.
std::string render_unified_diff(const CommitDiff& diff);

bool is_valid_commit_id(std::string_view id);

struct ChangedLines {
  std::set<int> pre;   // removed line numbers in the old image
  std::set<int> post;  // added line numbers in the new image
};

// Keyed by FileDiff::path().
std::map<std::string, ChangedLines> changed_line_map(const CommitDiff& diff);

Digest256 diff_fingerprint(const CommitDiff& diff);

}  // namespace cmo
