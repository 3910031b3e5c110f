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

#include "cmo/error.hpp"
#include "cmo/git_repo.hpp"
#include "fixture_repo.hpp"

namespace cmo {
namespace {

using testing::git;
using testing::shared_fixture_repo;

ErrorCode load_error(const std::filesystem::path& repo, const std::string& rev) {
  try {
    load_commit(repo, rev);
  } catch (const Error& e) {
    EXPECT_EQ(e.module(), "diff_model");
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::kConfig;
}

const std::string kOrderService = "src/main/java/org/example/shop/service/OrderService.java";

TEST(GitRepo, LoadsFixtureCommit) {
  const auto& repo = shared_fixture_repo();
  auto c = load_commit(repo.path, repo.commits.at("01-trycatch"));
  EXPECT_EQ(c.diff.commit_id, repo.commits.at("01-trycatch"));
  EXPECT_EQ(c.parent_id, repo.commits.at("base"));
  EXPECT_EQ(c.message.substr(0, 39), "Notify customers once an order is saved");
  ASSERT_EQ(c.diff.files.size(), 1u);
  EXPECT_EQ(c.diff.files[0].path(), kOrderService);
  ASSERT_EQ(c.snapshots.size(), 2u);
  auto expected_post = testing::read_file(testing::fixture_dir() / "javarepo/commits/01-trycatch/files" / kOrderService);
  auto expected_pre = testing::read_file(testing::fixture_dir() / "javarepo/base" / kOrderService);
  for (const auto& s : c.snapshots) {
    EXPECT_EQ(s.path, kOrderService);
    EXPECT_EQ(s.content, s.side == Side::kPost ? expected_post : expected_pre);
  }
  EXPECT_EQ(c.snapshots[0].line_count(), 28);
}

TEST(GitRepo, ShortRevisionsResolve) {
  const auto& repo = shared_fixture_repo();
  const auto& full = repo.commits.at("02-callee");
  auto c = load_commit(repo.path, full.substr(0, 10));
  EXPECT_EQ(c.diff.commit_id, full);
}

TEST(GitRepo, RootCommitDiffsAgainstEmptyTree) {
  const auto& repo = shared_fixture_repo();
  auto c = load_commit(repo.path, repo.commits.at("base"));
  EXPECT_TRUE(c.parent_id.empty());
  EXPECT_EQ(c.diff.files.size(), 24u);
  for (const auto& f : c.diff.files) EXPECT_EQ(f.change_kind, ChangeKind::kAdded);
}

TEST(GitRepo, RenameAndDeleteSnapshots) {
  const auto& repo = shared_fixture_repo();
  auto r = load_commit(repo.path, repo.commits.at("07-rename"));
  ASSERT_EQ(r.snapshots.size(), 2u);
  EXPECT_EQ(r.snapshots[0].path, "src/main/java/org/example/shop/util/Validation.java");
  EXPECT_EQ(r.snapshots[0].side, Side::kPre);
  EXPECT_EQ(r.snapshots[1].path, "src/main/java/org/example/shop/util/Validators.java");
  auto d = load_commit(repo.path, repo.commits.at("09-delete-file"));
  ASSERT_EQ(d.snapshots.size(), 1u);
  EXPECT_EQ(d.snapshots[0].side, Side::kPre);
}

TEST(GitRepo, ProjectSnapshotsCoverTheWholeTree) {
  const auto& repo = shared_fixture_repo();
  auto c = load_commit(repo.path, repo.commits.at("01-trycatch"));
  auto snaps = project_snapshots(repo.path, c, [](const std::string& p) { return p.ends_with(".java"); });
  int post = 0, pre = 0;
  for (const auto& s : snaps) (s.side == Side::kPost ? post : pre)++;
  EXPECT_EQ(post, 23);
  EXPECT_EQ(pre, 1);
}

TEST(GitRepo, Errors) {
  const auto& repo = shared_fixture_repo();
  EXPECT_EQ(load_error(repo.path, "0123456789abcdef0123456789abcdef01234567"), ErrorCode::kCommitNotFound);
  EXPECT_EQ(load_error(repo.path, "not a rev"), ErrorCode::kCommitNotFound);
  testing::TempDir empty;
  EXPECT_EQ(load_error(empty.path(), "HEAD"), ErrorCode::kRepoNotFound);
  EXPECT_EQ(load_error(empty.path() / "missing", "HEAD"), ErrorCode::kRepoNotFound);
}

TEST(GitRepo, MergeAndBinaryCommitsAreRejected) {
  testing::TempDir dir;
  auto p = dir.path();
  git(p, {"init", "-q", "-b", "main"});
  git(p, {"config", "user.name", "T"});
  git(p, {"config", "user.email", "t@example.org"});
  testing::write_file(p / "a.txt", "a\n");
  git(p, {"add", "-A"});
  git(p, {"commit", "-q", "-m", "first"});
  git(p, {"checkout", "-q", "-b", "side"});
  testing::write_file(p / "b.txt", "b\n");
  git(p, {"add", "-A"});
  git(p, {"commit", "-q", "-m", "side"});
  git(p, {"checkout", "-q", "main"});
  testing::write_file(p / "c.txt", "c\n");
  git(p, {"add", "-A"});
  git(p, {"commit", "-q", "-m", "main"});
  git(p, {"merge", "-q", "--no-edit", "side"});
  EXPECT_EQ(load_error(p, "HEAD"), ErrorCode::kMergeCommit);

  testing::write_file(p / "img.bin", std::string("\0\1\2\3binary", 10));
  git(p, {"add", "-A"});
  git(p, {"commit", "-q", "-m", "binary"});
  EXPECT_EQ(load_error(p, "HEAD"), ErrorCode::kBinaryOnlyCommit);
}

}  // namespace
}  // namespace cmo
