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

#include "cmo/git_repo.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

#include "cmo/error.hpp"
#include "cmo/process.hpp"

namespace cmo {
namespace {

constexpr std::string_view kModule = "diff_model";

std::string trim_newline(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

bool looks_binary(const std::string& content) {
  return content.find('\0', 0) != std::string::npos;
}

}  // namespace

std::string_view side_name(Side side) { return side == Side::kPre ? "pre" : "post"; }

int FileSnapshot::line_count() const {
  if (content.empty()) return 0;
  int n = 0;
  for (char c : content) n += c == '\n' ? 1 : 0;
  return content.back() == '\n' ? n : n + 1;
}

std::string GitRepo::git_binary() {
  const char* bin = std::getenv("CMO_GIT_BIN");
  return (bin != nullptr && *bin != '\0') ? bin : "git";
}

GitRepo::GitRepo(std::filesystem::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (!std::filesystem::is_directory(path_, ec)) {
    throw Error(ErrorCode::kRepoNotFound, std::string(kModule), "not a directory: " + path_.string());
  }
  int code = 0;
  run({"rev-parse", "--git-dir"}, &code);
  if (code != 0) {
    throw Error(ErrorCode::kRepoNotFound, std::string(kModule), "not a git repository: " + path_.string());
  }
}

std::string GitRepo::run(const std::vector<std::string>& args, int* exit_code) const {
  std::vector<std::string> argv = {git_binary(), "-C", path_.string(), "-c", "core.quotepath=true",
                                   "-c", "color.ui=never"};
  argv.insert(argv.end(), args.begin(), args.end());
  auto r = run_process(argv, {.cwd = std::nullopt, .stdin_data = {}, .env = {"LC_ALL=C", "GIT_PAGER=cat"}});
  if (exit_code != nullptr) {
    *exit_code = r.exit_code;
  } else if (r.exit_code != 0) {
    std::string cmd;
    for (const auto& a : args) cmd += " " + a;
    throw Error(ErrorCode::kProcessFailed, std::string(kModule), "git" + cmd + " failed: " + trim_newline(r.err));
  }
  return r.out;
}

std::string GitRepo::resolve_commit(const std::string& rev) const {
  int code = 0;
  auto out = run({"rev-parse", "--verify", "--quiet", rev + "^{commit}"}, &code);
  if (code != 0) {
    throw Error(ErrorCode::kCommitNotFound, std::string(kModule), "commit not found: " + rev);
  }
  return trim_newline(out);
}

std::vector<std::string> GitRepo::parents(const std::string& commit) const {
  auto out = trim_newline(run({"rev-list", "--parents", "-n", "1", commit}));
  std::istringstream in(out);
  std::vector<std::string> ids;
  std::string id;
  in >> id;  // the commit itself
  while (in >> id) ids.push_back(id);
  return ids;
}

std::string GitRepo::message(const std::string& commit) const {
  return trim_newline(run({"log", "-1", "--format=%B", commit}));
}

std::string GitRepo::diff_text(const std::string& commit) const {
  auto ps = parents(commit);
  std::string base;
  if (ps.empty()) {
    base = trim_newline(run({"hash-object", "-t", "tree", "/dev/null"}));
  } else {
    base = ps.front();
  }
  return run({"diff", "--no-color", "--no-ext-diff", "--no-textconv", "-U3", "-M", "--src-prefix=a/",
              "--dst-prefix=b/", base, commit});
}

std::optional<std::string> GitRepo::read_blob(const std::string& rev, const std::string& path) const {
  int code = 0;
  auto out = run({"cat-file", "blob", rev + ":" + path}, &code);
  if (code != 0) return std::nullopt;
  return out;
}

std::vector<std::string> GitRepo::list_files(const std::string& rev) const {
  auto out = run({"ls-tree", "-r", "-z", "--name-only", rev});
  std::vector<std::string> files;
  std::size_t pos = 0;
  while (pos < out.size()) {
    auto end = out.find('\0', pos);
    if (end == std::string::npos) end = out.size();
    if (end > pos) files.push_back(out.substr(pos, end - pos));
    pos = end + 1;
  }
  return files;
}

std::vector<FileSnapshot> GitRepo::tree_snapshots(const std::string& rev, Side side,
                                                  const std::function<bool(const std::string&)>& filter) const {
  std::vector<FileSnapshot> out;
  for (const auto& path : list_files(rev)) {
    if (filter && !filter(path)) continue;
    auto blob = read_blob(rev, path);
    if (!blob || looks_binary(*blob)) continue;
    out.push_back({path, std::move(*blob), side});
  }
  return out;
}

LoadedCommit load_commit(const std::filesystem::path& repo_path, const std::string& commit_id) {
  GitRepo repo(repo_path);
  auto full = repo.resolve_commit(commit_id);
  auto ps = repo.parents(full);
  if (ps.size() > 1) {
    throw Error(ErrorCode::kMergeCommit, std::string(kModule),
                "merge commit " + full + " has " + std::to_string(ps.size()) + " parents");
  }

  LoadedCommit lc;
  lc.parent_id = ps.empty() ? "" : ps.front();
  lc.message = repo.message(full);
  lc.diff = parse_unified_diff(repo.diff_text(full));
  lc.diff.commit_id = full;
  lc.diff.repo_id = std::filesystem::weakly_canonical(repo_path).filename().string();
  if (!lc.diff.has_text_hunks()) {
    throw Error(ErrorCode::kBinaryOnlyCommit, std::string(kModule), "commit " + full + " has no text hunks");
  }

  for (const auto& f : lc.diff.files) {
    if (f.binary) continue;
    if (f.old_path && !lc.parent_id.empty()) {
      if (auto blob = repo.read_blob(lc.parent_id, *f.old_path)) {
        lc.snapshots.push_back({*f.old_path, std::move(*blob), Side::kPre});
      }
    }
    if (f.new_path) {
      if (auto blob = repo.read_blob(full, *f.new_path)) {
        lc.snapshots.push_back({*f.new_path, std::move(*blob), Side::kPost});
      }
    }
  }
  return lc;
}

std::vector<FileSnapshot> project_snapshots(const std::filesystem::path& repo_path, const LoadedCommit& commit,
                                            const std::function<bool(const std::string&)>& filter) {
  std::vector<FileSnapshot> out = commit.snapshots;
  std::set<std::string> have;
  for (const auto& s : out) {
    if (s.side == Side::kPost) have.insert(s.path);
  }
  GitRepo repo(repo_path);
  for (auto& s : repo.tree_snapshots(commit.diff.commit_id, Side::kPost, filter)) {
    if (!have.count(s.path)) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace cmo
