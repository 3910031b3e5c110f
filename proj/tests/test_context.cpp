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

#include "cmo/context.hpp"
#include "cmo/error.hpp"
#include "cmo/llm.hpp"
#include "manifest.hpp"

namespace cmo {
namespace {

using testing::expected_sets;
using testing::extract_sets;
using testing::load_fixture_commit;
using testing::load_manifest;

const std::string kPkg = "src/main/java/org/example/shop/";

class ManifestTest : public ::testing::TestWithParam<std::string> {};

TEST_P(ManifestTest, ExtractedItemSetsEqualManifest) {
  auto c = load_fixture_commit(GetParam());
  auto got = extract_sets(c);
  auto want = expected_sets(load_manifest(GetParam()));
  EXPECT_EQ(got.blocks, want.blocks);
  EXPECT_EQ(got.callees, want.callees);
  EXPECT_EQ(got.vars, want.vars);
}

TEST_P(ManifestTest, ImportantFileMatchesManifest) {
  auto c = load_fixture_commit(GetParam());
  auto item = rank_important_files(c.commit.diff);
  auto want = load_manifest(GetParam())["important_file"].get<std::string>();
  EXPECT_EQ(item.payload.rfind("Most important file: " + want + "\n", 0), 0u) << item.payload;
}

INSTANTIATE_TEST_SUITE_P(Fixture, ManifestTest,
                         ::testing::Values("01-trycatch", "02-callee", "03-getters", "04-calls", "05-variables",
                                           "06-nested-if", "10-churn", "11-issue"),
                         [](const auto& info) {
                           std::string n = info.param;
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(EnclosingBlock, TryCatchPayloadIsTheWholeStatement) {
  auto c = load_fixture_commit("01-trycatch");
  auto items = extract_enclosing_blocks(c.commit.diff, c.index);
  ASSERT_EQ(items.size(), 1u);
  auto file = testing::read_file(testing::fixture_dir() /
                                 "javarepo/commits/01-trycatch/files/src/main/java/org/example/shop/service/OrderService.java");
  auto expected = testing::line_range(file, 19, 26);
  auto payload = items[0].payload;
  if (!expected.empty() && expected.back() == '\n' && (payload.empty() || payload.back() != '\n')) payload += '\n';
  EXPECT_EQ(payload, expected);
  EXPECT_EQ(items[0].kind, ContextKind::kEnclosingCodeBlock);
  EXPECT_EQ(items[0].locator->side, Side::kPost);
}

TEST(EnclosingBlock, NestedIfIsSmallerThanLoop) {
  auto c = load_fixture_commit("06-nested-if");
  auto items = extract_enclosing_blocks(c.commit.diff, c.index);
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0].payload.find("for ("), std::string::npos);
  EXPECT_EQ(items[0].payload.rfind("            if (item.getQuantity() < threshold) {", 0), 0u);
}

TEST(EnclosingBlock, AddedFileHasNoBlock) {
  auto c = load_fixture_commit("08-add-file");
  EXPECT_TRUE(extract_enclosing_blocks(c.commit.diff, c.index).empty());
}

TEST(ChangeRegions, DeletedFileUsesPreSide) {
  auto c = load_fixture_commit("09-delete-file");
  auto regions = change_regions(c.commit.diff);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].side, Side::kPre);
  EXPECT_EQ(regions[0].path, kPkg + "config/FeatureFlags.java");
  EXPECT_EQ(regions[0].span.begin, 1);
  EXPECT_EQ(regions[0].span.end, 25);
  EXPECT_TRUE(extract_enclosing_blocks(c.commit.diff, c.index).empty());
  EXPECT_TRUE(extract_callee_knowledge(c.commit.diff, c.index, nullptr).empty());
}

TEST(ChangeRegions, RenameReportsNewPath) {
  auto c = load_fixture_commit("07-rename");
  ASSERT_EQ(c.commit.diff.files.size(), 1u);
  EXPECT_EQ(c.commit.diff.files[0].change_kind, ChangeKind::kRenamed);
  for (const auto& r : change_regions(c.commit.diff)) {
    if (r.side == Side::kPost) EXPECT_EQ(r.path, kPkg + "util/Validators.java");
  }
}

TEST(ChangeRegions, SyntheticHunkRuns) {
  auto diff = parse_unified_diff(
      "diff --git a/A.java b/A.java\n"
      "--- a/A.java\n"
      "+++ b/A.java\n"
      "@@ -1,6 +1,6 @@\n"
      " a\n"
      "-b\n"
      "+B\n"
      " c\n"
      "-d\n"
      " e\n"
      "+f\n"
      " g\n");
  auto regions = change_regions(diff);
  ASSERT_EQ(regions.size(), 3u);
  EXPECT_EQ(regions[0].side, Side::kPost);
  EXPECT_EQ(regions[0].span.begin, 2);
  EXPECT_EQ(regions[0].span.end, 2);
  EXPECT_EQ(regions[1].side, Side::kPre);
  EXPECT_EQ(regions[1].span.begin, 4);
  EXPECT_EQ(regions[2].side, Side::kPost);
  EXPECT_EQ(regions[2].span.begin, 5);
  EXPECT_EQ(changed_lines(diff, "A.java", Side::kPost), (std::set<int>{2, 5}));
  EXPECT_EQ(changed_lines(diff, "A.java", Side::kPre), (std::set<int>{2, 4}));
}

TEST(VariableTypes, PayloadNamesKindAndOwner) {
  auto c = load_fixture_commit("05-variables");
  auto items = extract_variable_types(c.commit.diff, c.index);
  auto it = std::find_if(items.begin(), items.end(),
                         [](const ContextItem& i) { return i.payload.rfind("createdBy:", 0) == 0; });
  ASSERT_NE(it, items.end());
  EXPECT_NE(it->payload.find("protected String"), std::string::npos);
  EXPECT_NE(it->payload.find("field of BaseEntity"), std::string::npos);
}

TEST(Callee, SummarizerPayloadIsUsed) {
  auto c = load_fixture_commit("02-callee");
  auto backend = std::make_shared<llm::MockBackend>();
  backend->set_responder([](const llm::ChatRequest&) { return std::string("Returns the shown computer."); });
  llm::ChatClient client(backend, {.retry = {}, .cache_enabled = false, .cache_dir = std::nullopt, .sleep = {}});
  Summarizer summarizer(client);
  auto items = extract_callee_knowledge(c.commit.diff, c.index, &summarizer);
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0].payload, "ComputerView.getComputer: Returns the shown computer.");
  EXPECT_EQ(backend->calls(), 1);
}

TEST(Callee, RawBodyWithoutSummarizer) {
  auto c = load_fixture_commit("02-callee");
  auto items = extract_callee_knowledge(c.commit.diff, c.index, nullptr);
  ASSERT_EQ(items.size(), 1u);
  EXPECT_NE(items[0].payload.find("return computer;"), std::string::npos);
}

TEST(UnitSummaries, MethodAndClassOfTheChange) {
  auto c = load_fixture_commit("05-variables");
  auto backend = std::make_shared<llm::MockBackend>();
  backend->add_rule("## Method", "Builds a label.");
  backend->add_rule("## Class", "A sellable product.");
  llm::ChatClient client(backend);
  Summarizer summarizer(client);
  auto items = extract_unit_summaries(c.commit.diff, c.index, &summarizer);
  std::vector<std::string> payloads;
  for (const auto& i : items) payloads.push_back(std::string(context_kind_name(i.kind)) + "|" + i.payload);
  std::sort(payloads.begin(), payloads.end());
  ASSERT_EQ(payloads.size(), 2u);
  EXPECT_EQ(payloads[0], "ClassBodySummary|Product: A sellable product.");
  EXPECT_EQ(payloads[1], "MethodBodySummary|Product.describe: Builds a label.");
}

TEST(UnitSummaries, OutlineFallbackWithoutSummarizer) {
  auto c = load_fixture_commit("05-variables");
  auto items = extract_unit_summaries(c.commit.diff, c.index, nullptr);
  ASSERT_EQ(items.size(), 2u);
  for (const auto& i : items) EXPECT_NE(i.provenance.find("outline"), std::string::npos);
}

TEST(ImportantFiles, TestPathRules) {
  EXPECT_TRUE(is_test_path("src/test/java/a/FooTest.java"));
  EXPECT_TRUE(is_test_path("lib/FooTests.java"));
  EXPECT_TRUE(is_test_path("lib/FooIT.java"));
  EXPECT_TRUE(is_test_path("lib/TestFoo.java"));
  EXPECT_FALSE(is_test_path("lib/Testimony.java"));
  EXPECT_FALSE(is_test_path("src/main/java/Contest.java"));
}

TEST(ImportantFiles, EqualChurnPrefersProduction) {
  auto c = load_fixture_commit("10-churn");
  const auto& files = c.commit.diff.files;
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].added_lines() + files[0].removed_lines(), files[1].added_lines() + files[1].removed_lines());
  auto item = rank_important_files(c.commit.diff);
  EXPECT_NE(item.payload.find("production file"), std::string::npos);
}

TEST(Issues, FindsReferencesInOrder) {
  EXPECT_EQ(find_issue_refs("Fixes #42, see also SHOP-7 and #42 again"),
            (std::vector<std::string>{"42", "SHOP-7"}));
  EXPECT_TRUE(find_issue_refs("color: &#35; and x#5").empty());
  EXPECT_TRUE(find_issue_refs("plain message").empty());
}

TEST(Issues, LinksFixtureIssues) {
  auto c = load_fixture_commit("11-issue");
  FixtureForge forge(testing::fixture_dir() / "javarepo" / "forge");
  auto item = link_issue_or_pr(c.commit.message, c.commit.diff, &forge, 2048);
  ASSERT_TRUE(item.has_value());
  EXPECT_EQ(item->kind, ContextKind::kPullRequestIssueReport);
  EXPECT_NE(item->payload.find("Subtotal ignores product price"), std::string::npos);
  EXPECT_NE(item->payload.find("Pricing audit"), std::string::npos);
  EXPECT_LT(item->payload.find("Subtotal"), item->payload.find("Pricing audit"));
}

TEST(Issues, BudgetTruncates) {
  auto c = load_fixture_commit("11-issue");
  FixtureForge forge(testing::fixture_dir() / "javarepo" / "forge");
  auto item = link_issue_or_pr(c.commit.message, c.commit.diff, &forge, 40);
  ASSERT_TRUE(item.has_value());
  EXPECT_LE(item->payload.size(), 40u);
}

TEST(Issues, AbsentWithoutForgeOrRefs) {
  auto c = load_fixture_commit("11-issue");
  EXPECT_FALSE(link_issue_or_pr(c.commit.message, c.commit.diff, nullptr, 2048).has_value());
  FixtureForge forge(testing::fixture_dir() / "javarepo" / "forge");
  EXPECT_FALSE(link_issue_or_pr("no refs here", c.commit.diff, &forge, 2048).has_value());
}

TEST(Issues, UnreachableForgeIsSkipped) {
  auto c = load_fixture_commit("11-issue");
  FixtureForge forge("/nonexistent/forge/dir");
  EXPECT_FALSE(link_issue_or_pr(c.commit.message, c.commit.diff, &forge, 2048).has_value());
}

TEST(CommitType, ParsesLabels) {
  const auto& tax = default_commit_taxonomy();
  EXPECT_EQ(parse_commit_label("Corrective", tax), "corrective");
  EXPECT_EQ(parse_commit_label("The answer is: perfective.", tax), "perfective");
  EXPECT_FALSE(parse_commit_label("corrective or adaptive", tax).has_value());
  EXPECT_FALSE(parse_commit_label("feature", tax).has_value());
}

TEST(CommitType, RetriesOnceAtHigherTemperature) {
  auto c = load_fixture_commit("01-trycatch");
  auto backend = std::make_shared<llm::MockBackend>();
  backend->push_sequence("not sure");
  backend->push_sequence("adaptive");
  llm::ChatClient client(backend);
  auto t = classify_commit_type(c.commit.diff, c.commit.message, client);
  EXPECT_EQ(t.label, "adaptive");
  auto tr = backend->transcript();
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr[0].temperature, 0.0);
  EXPECT_EQ(tr[1].temperature, 1.0);
}

TEST(CommitType, UnparseableAfterRetry) {
  auto c = load_fixture_commit("01-trycatch");
  auto backend = std::make_shared<llm::MockBackend>();
  backend->push_sequence("?");
  backend->push_sequence("??");
  llm::ChatClient client(backend);
  try {
    classify_commit_type(c.commit.diff, c.commit.message, client);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnparseableLabel);
  }
}

TEST(CollectContexts, AllKindsForIssueCommit) {
  auto c = load_fixture_commit("11-issue");
  FixtureForge forge(testing::fixture_dir() / "javarepo" / "forge");
  ExtractionOptions opts;
  opts.forge = &forge;
  auto all = collect_contexts(c.commit.diff, c.index, c.commit.message, opts);
  for (auto k : kInjectableKinds) {
    EXPECT_TRUE(all.count(k) && !all[k].empty()) << context_kind_name(k);
  }
  EXPECT_EQ(all.count(ContextKind::kCommitType), 0u);
}

TEST(ContextKinds, NamesRoundTrip) {
  for (auto k : kAllContextKinds) EXPECT_EQ(parse_context_kind(context_kind_name(k)), k);
  EXPECT_FALSE(is_injectable(ContextKind::kCommitType));
  EXPECT_EQ(kInjectableKinds.size(), 7u);
  EXPECT_THROW(parse_context_kind("Nope"), Error);
}

}  // namespace
}  // namespace cmo
