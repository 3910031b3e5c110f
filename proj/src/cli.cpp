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

#include "cmo/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cmo/context.hpp"
#include "cmo/error.hpp"
#include "cmo/git_repo.hpp"
#include "cmo/log.hpp"
#include "cmo/optimizer.hpp"
#include "cmo/quality.hpp"
#include "cmo/retrieval.hpp"
#include "cmo/text_util.hpp"
#include "json.hpp"

namespace cmo {
namespace {

constexpr const char* kModule = "cli";
using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Error(ErrorCode::kIo, kModule, "cannot write " + path);
}

struct GlobalFlags {
  std::string config;
  std::string llm_kind;
  std::string mock_script;
  std::string model;
  std::string cache_dir;
  bool no_cache = false;
  bool verbose = false;
};

struct Runtime {
  CmoConfig cfg;
  std::shared_ptr<llm::ChatClient> client;

  llm::ChatClient& chat() {
    if (!client) {
      std::shared_ptr<llm::ChatBackend> backend;
      if (cfg.llm.kind == "mock") {
        backend = llm::MockBackend::from_file(cfg.llm.mock_script);
      } else {
        llm::HttpBackendOptions o;
        o.base_url = cfg.llm.base_url;
        o.api_key = cfg.llm.api_key;
        o.default_model = cfg.llm.model;
        o.timeout = std::chrono::milliseconds(cfg.llm.timeout_ms);
        backend = std::make_shared<llm::HttpBackend>(o);
      }
      llm::ClientOptions co;
      co.retry.max_attempts = cfg.llm.max_attempts;
      co.cache_enabled = cfg.llm.cache;
      if (!cfg.cache_dir.empty()) co.cache_dir = cfg.cache_dir;
      client = std::make_shared<llm::ChatClient>(backend, co);
      client->set_default_model(cfg.llm.model);
    }
    return *client;
  }

  ScorerSet scorers() {
    auto s = ScorerSet::uniform(chat());
    s.model_ids = cfg.scorer_models;
    s.diff_token_budget = cfg.diff_token_budget;
    return s;
  }
};

ordered_json quality_json(const QualityVector& q, double total) {
  ordered_json j;
  for (auto m : kAllMetrics) j[std::string(metric_name(m))] = q[m];
  j["total"] = total;
  return j;
}

ordered_json item_json(const ContextItem& item) {
  ordered_json j;
  j["kind"] = std::string(context_kind_name(item.kind));
  j["payload"] = item.payload;
  if (item.locator) {
    j["locator"] = {{"path", item.locator->path},
                    {"side", std::string(side_name(item.locator->side))},
                    {"begin_line", item.locator->span.begin},
                    {"end_line", item.locator->span.end}};
  } else {
    j["locator"] = nullptr;
  }
  j["provenance"] = item.provenance;
  return j;
}

std::unique_ptr<ForgeClient> make_forge(const CmoConfig& cfg) {
  if (!cfg.forge.fixture_dir.empty()) return std::make_unique<FixtureForge>(cfg.forge.fixture_dir);
  if (!cfg.forge.url.empty()) return std::make_unique<HttpForge>(cfg.forge.url, cfg.forge.token);
  return nullptr;
}

bool is_java(const std::string& path) { return JavaFrontend().accepts(path); }

struct EmbedderPair {
  std::unique_ptr<Embedder> diff;
  std::unique_ptr<Embedder> text;
};

EmbedderPair make_embedders(const CmoConfig& cfg) {
  return {make_embedder(cfg.retrieval.diff_embedder), make_embedder(cfg.retrieval.text_embedder)};
}

// --- subcommands -----------------------------------------------------------

struct OptimizeArgs {
  std::string repo, commit, message, from, corpus, out, trace;
  bool blank = false;
};

int run_optimize(Runtime& rt, const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  auto& cfg = rt.cfg;
  const std::string corpus_path = a.corpus.empty() ? cfg.corpus_path : a.corpus;
  if (corpus_path.empty()) throw Error(ErrorCode::kConfig, kModule, "no corpus given (--corpus or retrieval.corpus)");

  auto commit = load_commit(a.repo, a.commit);
  auto store = CorpusStore::load(corpus_path);
  auto emb = make_embedders(cfg);
  store.check_embedders(*emb.diff, *emb.text);

  EvaluatorDeps deps;
  deps.store = &store;
  deps.diff_embedder = emb.diff.get();
  deps.text_embedder = emb.text.get();
  deps.k = cfg.retrieval.k;
  deps.weights = cfg.weights;
  deps.scorers = rt.scorers();
  Evaluator evaluator(deps);
  const auto exemplars = exemplars_from(evaluator.retrieve(commit.diff));

  PromptOptions prompts;
  prompts.format_template = cfg.format_template;
  prompts.diff_token_budget = cfg.diff_token_budget;

  std::string initial;
  if (a.blank) {
    initial = generate_initial_message(commit.diff, exemplars, rt.chat(), prompts);
  } else if (!a.from.empty()) {
    initial = trim(read_file(a.from));
  } else if (!a.message.empty()) {
    initial = a.message;
  } else {
    initial = trim(commit.message);
  }

  auto index = build_project_index(project_snapshots(a.repo, commit, is_java));
  std::optional<Summarizer> summarizer;
  if (cfg.summaries) summarizer.emplace(rt.chat());
  auto forge = make_forge(cfg);
  ExtractionOptions xo;
  xo.summarizer = summarizer ? &*summarizer : nullptr;
  xo.forge = forge.get();
  xo.issue_byte_budget = cfg.issue_byte_budget;
  auto contexts = collect_contexts(commit.diff, index, initial, xo);
  auto bundles = bundle_contexts(contexts, cfg.context_byte_budget);

  std::string commit_type;
  try {
    commit_type = classify_commit_type(commit.diff, a.blank ? "" : initial, rt.chat(), cfg.commit_types,
                                       cfg.diff_token_budget)
                      .label;
  } catch (const Error& e) {
    log::warn(kModule, std::string("commit type unavailable: ") + e.what());
  }

  LlmUpdater updater(rt.chat(), exemplars, commit_type, prompts);
  std::optional<std::filesystem::path> trace;
  if (!a.trace.empty()) {
    trace = a.trace;
  } else if (!cfg.trace_path.empty()) {
    trace = cfg.trace_path;
  }
  auto result = optimize(commit.diff, initial, bundles, cfg.optimizer, evaluator, updater, trace);

  out << result.message << "\n";
  if (!a.out.empty()) write_file(a.out, result.message + "\n");
  err << quality_json(result.quality, result.score).dump() << "\n";
  err << "[optimizer] info: stop_reason=" << stop_reason_name(result.stop_reason) << " steps=" << result.steps_used
      << " initial_score=" << result.initial_score << "\n";
  return 0;
}

int run_score(Runtime& rt, const std::string& diff_path, const std::string& message_path, const std::string& corpus,
              bool llm_only, std::ostream& out) {
  auto& cfg = rt.cfg;
  auto diff = parse_unified_diff(read_file(diff_path));
  const auto message = trim(read_file(message_path));
  EvaluatorDeps deps;
  deps.weights = cfg.weights;
  if (llm_only) {
    for (auto m : kAllMetrics) deps.weights[m].use_sim = false;
  }
  std::optional<CorpusStore> store;
  EmbedderPair emb;
  const std::string corpus_path = corpus.empty() ? cfg.corpus_path : corpus;
  if (deps.weights.any_sim()) {
    if (corpus_path.empty()) throw Error(ErrorCode::kEmptyCorpus, kModule, "similarity metrics need --corpus");
    store = CorpusStore::load(corpus_path);
    emb = make_embedders(cfg);
    store->check_embedders(*emb.diff, *emb.text);
    deps.store = &*store;
    deps.diff_embedder = emb.diff.get();
    deps.text_embedder = emb.text.get();
  }
  deps.k = cfg.retrieval.k;
  deps.scorers = rt.scorers();
  Evaluator evaluator(deps);
  auto ev = evaluator.evaluate(diff, message);
  out << quality_json(ev.quality, ev.score).dump(2) << "\n";
  return 0;
}

int run_extract(Runtime& rt, const std::string& repo, const std::string& commit_id,
                const std::vector<std::string>& kind_names, bool summarize, std::ostream& out) {
  auto& cfg = rt.cfg;
  std::vector<ContextKind> kinds;
  for (const auto& n : kind_names) {
    std::stringstream ss(n);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!trim(part).empty()) kinds.push_back(parse_context_kind(part));
    }
  }
  if (kinds.empty()) kinds.assign(kAllContextKinds.begin(), kAllContextKinds.end());

  auto commit = load_commit(repo, commit_id);
  auto index = build_project_index(project_snapshots(repo, commit, is_java));
  std::optional<Summarizer> summarizer;
  if (summarize) summarizer.emplace(rt.chat());
  auto forge = make_forge(cfg);

  ordered_json arr = ordered_json::array();
  auto add = [&](const std::vector<ContextItem>& items) {
    for (const auto& it : items) arr.push_back(item_json(it));
  };
  for (auto k : kinds) {
    switch (k) {
      case ContextKind::kImportantFileInfo:
        add({rank_important_files(commit.diff)});
        break;
      case ContextKind::kCommitType: {
        auto ct = classify_commit_type(commit.diff, commit.message, rt.chat(), cfg.commit_types, cfg.diff_token_budget);
        ContextItem item;
        item.kind = ContextKind::kCommitType;
        item.payload = ct.label;
        item.provenance = "classify_commit_type(raw=" + trim(ct.raw_response) + ")";
        add({item});
        break;
      }
      case ContextKind::kPullRequestIssueReport:
        if (auto item = link_issue_or_pr(commit.message, commit.diff, forge.get(), cfg.issue_byte_budget)) add({*item});
        break;
      case ContextKind::kMethodBodySummary:
      case ContextKind::kClassBodySummary: {
        std::vector<ContextItem> items;
        for (auto& it : extract_unit_summaries(commit.diff, index, summarizer ? &*summarizer : nullptr)) {
          if (it.kind == k) items.push_back(std::move(it));
        }
        add(items);
        break;
      }
      case ContextKind::kEnclosingCodeBlock:
        add(extract_enclosing_blocks(commit.diff, index));
        break;
      case ContextKind::kCalleeKnowledge:
        add(extract_callee_knowledge(commit.diff, index, summarizer ? &*summarizer : nullptr));
        break;
      case ContextKind::kVariableDataType:
        add(extract_variable_types(commit.diff, index));
        break;
    }
  }
  out << arr.dump(2) << "\n";
  return 0;
}

int run_build_corpus(Runtime& rt, const std::string& input, const std::string& out_path, int jobs,
                     const std::string& classifier_kind, std::ostream& err) {
  auto inputs = read_corpus_inputs(input);
  auto emb = make_embedders(rt.cfg);
  std::unique_ptr<WhatWhyClassifier> classifier;
  if (classifier_kind == "rules") {
    classifier = std::make_unique<RuleWhatWhyClassifier>();
  } else {
    classifier = std::make_unique<LlmWhatWhyClassifier>(rt.chat());
  }
  BuildStats stats;
  build_corpus(inputs, *emb.diff, *emb.text, *classifier, out_path, jobs, &stats);
  err << "[retrieval_corpus] info: " << stats.kept << " of " << stats.inputs << " inputs kept (" << stats.filtered
      << " filtered, " << stats.failed << " failed)\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Commit message optimization toolkit"};
  app.name(args.empty() ? "cmo" : std::filesystem::path(args.front()).filename().string());
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON config file (default: $CMO_CONFIG)");
  app.add_option("--llm", g.llm_kind, "Chat backend")->check(CLI::IsMember({"http", "mock"}));
  app.add_option("--mock-script", g.mock_script, "Script file for the mock backend");
  app.add_option("--model", g.model, "Chat model id");
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
  app.add_flag("--no-cache", g.no_cache, "Disable the response cache");
  app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");

  OptimizeArgs oa;
  auto* optimize_cmd = app.add_subcommand("optimize", "Optimize the message of one commit");
  optimize_cmd->add_option("--repo", oa.repo, "Repository path")->required();
  optimize_cmd->add_option("--commit", oa.commit, "Commit id")->required();
  auto* msg_opt = optimize_cmd->add_option("--message", oa.message, "Initial message text");
  auto* from_opt = optimize_cmd->add_option("--from", oa.from, "Read the initial message from a file");
  auto* blank_opt = optimize_cmd->add_flag("--blank", oa.blank, "Generate the initial message first");
  msg_opt->excludes(from_opt)->excludes(blank_opt);
  from_opt->excludes(blank_opt);
  optimize_cmd->add_option("--corpus", oa.corpus, "Corpus file");
  optimize_cmd->add_option("--out", oa.out, "Also write the message to a file");
  optimize_cmd->add_option("--trace", oa.trace, "Write the search trace (JSON lines)");

  std::string bc_input, bc_out, bc_classifier = "llm";
  int bc_jobs = 1;
  auto* build_cmd = app.add_subcommand("build-corpus", "Build a retrieval corpus");
  build_cmd->add_option("--input", bc_input, "JSON lines of {diff, message, repo, commit_id, timestamp}")->required();
  build_cmd->add_option("--out", bc_out, "Corpus output path")->required();
  build_cmd->add_option("--jobs", bc_jobs, "Parallel workers")->check(CLI::PositiveNumber);
  build_cmd->add_option("--classifier", bc_classifier, "What/why classifier")->check(CLI::IsMember({"llm", "rules"}));

  std::string sc_diff, sc_message, sc_corpus;
  bool sc_llm_only = false;
  auto* score_cmd = app.add_subcommand("score", "Score a message against a diff");
  score_cmd->add_option("--diff", sc_diff, "Unified diff file")->required();
  score_cmd->add_option("--message", sc_message, "Message file")->required();
  score_cmd->add_option("--corpus", sc_corpus, "Corpus file");
  score_cmd->add_flag("--llm-only", sc_llm_only, "Ignore similarity scores");

  std::string ex_repo, ex_commit;
  std::vector<std::string> ex_kinds;
  bool ex_summarize = false;
  auto* extract_cmd = app.add_subcommand("extract", "Print the contexts extracted for a commit");
  extract_cmd->add_option("--repo", ex_repo, "Repository path")->required();
  extract_cmd->add_option("--commit", ex_commit, "Commit id")->required();
  extract_cmd->add_option("--kinds", ex_kinds, "Comma-separated context kinds")->delimiter(',');
  extract_cmd->add_flag("--summarize", ex_summarize, "Summarize units through the chat backend");

  std::string rm_candidate, rm_reference;
  auto* ref_cmd = app.add_subcommand("ref-metrics", "BLEU-4 and ROUGE-L of a message against a reference");
  ref_cmd->add_option("--candidate", rm_candidate, "Candidate message file")->required();
  ref_cmd->add_option("--reference", rm_reference, "Reference message file")->required();

  std::string ft_input, ft_metric, ft_out;
  std::uint64_t ft_seed = 0;
  auto* ft_cmd = app.add_subcommand("finetune-data", "Balanced chat-format training data for one metric");
  ft_cmd->add_option("--input", ft_input, "JSON lines of {diff, message, scores}")->required();
  ft_cmd->add_option("--metric", ft_metric, "Metric name")->required();
  ft_cmd->add_option("--seed", ft_seed, "Sampling seed");
  ft_cmd->add_option("--out", ft_out, "Output file")->required();

  auto* config_cmd = app.add_subcommand("config", "Print the resolved configuration");

  std::vector<std::string> rev;
  if (args.size() > 1) rev.assign(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    return 1;
  }

  if (g.verbose) log::set_min_level(log::Level::kInfo);
  try {
    Runtime rt;
    rt.cfg = load_config(g.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(g.config), env);
    if (!g.llm_kind.empty()) rt.cfg.llm.kind = g.llm_kind;
    if (!g.mock_script.empty()) rt.cfg.llm.mock_script = g.mock_script;
    if (!g.model.empty()) rt.cfg.llm.model = g.model;
    if (!g.cache_dir.empty()) rt.cfg.cache_dir = g.cache_dir;
    if (g.no_cache) rt.cfg.llm.cache = false;
    rt.cfg.validate();

    if (*optimize_cmd) return run_optimize(rt, oa, out, err);
    if (*build_cmd) return run_build_corpus(rt, bc_input, bc_out, bc_jobs, bc_classifier, err);
    if (*score_cmd) return run_score(rt, sc_diff, sc_message, sc_corpus, sc_llm_only, out);
    if (*extract_cmd) return run_extract(rt, ex_repo, ex_commit, ex_kinds, ex_summarize, out);
    if (*ref_cmd) {
      auto r = reference_metrics(read_file(rm_candidate), read_file(rm_reference));
      out << ordered_json{{"bleu4", r.bleu4}, {"rouge_l_f1", r.rouge_l_f1}}.dump(2) << "\n";
      return 0;
    }
    if (*ft_cmd) {
      auto ds = prepare_finetune_dataset(read_labeled_examples(ft_input), parse_metric(ft_metric), ft_seed,
                                         rt.cfg.diff_token_budget);
      write_file(ft_out, ds.jsonl);
      err << "[quality_eval] info: wrote " << ds.examples.size() << " examples\n";
      return 0;
    }
    if (*config_cmd) {
      out << rt.cfg.to_json() << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "[" << e.module() << "] " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "[cli] error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace cmo
