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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cmo/diff_model.hpp"

namespace cmo {

enum class Side { kPre, kPost };

std::string_view side_name(Side side);

struct FileSnapshot {
  std::string path;
  std::string content;
  Side side = Side::kPost;

  int line_count() const;
};

struct LoadedCommit {
  CommitDiff diff;
  std::vector<FileSnapshot> snapshots;  // pre/post images of touched text files
  std::string message;                  // the commit's own message
  std::string parent_id;                // empty for a root commit
};

// Thin read-only wrapper around the git executable ($CMO_GIT_BIN or "git").
class GitRepo {
 public:
  // Throws Error(kRepoNotFound) if path is not inside a work tree / git dir.
  explicit GitRepo(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }

  // Full object name of a commit; throws Error(kCommitNotFound).
  std::string resolve_commit(const std::string& rev) const;
  std::vector<std::string> parents(const std::string& commit) const;
  std::string message(const std::string& commit) const;

  // `git diff` of the commit against its first parent (or the empty tree),
  // three context lines, rename detection on.
  std::string diff_text(const std::string& commit) const;

  std::optional<std::string> read_blob(const std::string& rev, const std::string& path) const;
  std::vector<std::string> list_files(const std::string& rev) const;

  // Full images of all files at rev whose path passes the filter.
  std::vector<FileSnapshot> tree_snapshots(const std::string& rev, Side side,
                                           const std::function<bool(const std::string&)>& filter) const;

  static std::string git_binary();

 private:
  std::string run(const std::vector<std::string>& args, int* exit_code = nullptr) const;

  std::filesystem::path path_;
};

// Merge commits (more than one parent) are rejected with Error(kMergeCommit).
LoadedCommit load_commit(const std::filesystem::path& repo_path, const std::string& commit_id);

// The commit's touched-file snapshots plus every other post-commit file that
// passes `filter`, for project-wide symbol resolution.
std::vector<FileSnapshot> project_snapshots(const std::filesystem::path& repo_path, const LoadedCommit& commit,
                                            const std::function<bool(const std::string&)>& filter);

}  // namespace cmo
