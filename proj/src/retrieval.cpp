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

#include "cmo/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "cmo/digest.hpp"
#include "cmo/error.hpp"
#include "cmo/http.hpp"
#include "cmo/log.hpp"
#include "cmo/text_util.hpp"
#include "json.hpp"

namespace cmo {
namespace {

constexpr const char* kModule = "retrieval_corpus";
using nlohmann::json;
using nlohmann::ordered_json;

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> read_vector(const json& j, const char* field, std::size_t line) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw Error(ErrorCode::kCorpusFormat, kModule, "line " + std::to_string(line) + ": missing " + field);
  }
  std::vector<double> v;
  v.reserve(j[field].size());
  for (const auto& x : j[field]) {
    if (!x.is_number()) {
      throw Error(ErrorCode::kCorpusFormat, kModule, "line " + std::to_string(line) + ": non-numeric " + field);
    }
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

UnitVector UnitVector::normalize(std::vector<double> v) {
  const double n = l2(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kPreconditionViolation, kModule, "cannot normalize a zero or non-finite vector");
  }
  for (auto& x : v) x /= n;
  return UnitVector(std::move(v));
}

UnitVector UnitVector::from_stored(std::vector<double> v) {
  const double n = l2(v);
  if (v.empty() || !(std::abs(n - 1.0) <= 1e-6)) {
    throw Error(ErrorCode::kCorpusFormat, kModule, "stored vector is not unit length (norm " + std::to_string(n) + ")");
  }
  return UnitVector(std::move(v));
}

double UnitVector::norm() const { return l2(c_); }

double cosine(const UnitVector& a, const UnitVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kEmbedderMismatch, kModule,
                "dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += a.components()[i] * b.components()[i];
  return std::clamp(s, -1.0, 1.0);
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim < 2) throw Error(ErrorCode::kConfig, kModule, "hash embedder needs dim >= 2");
}

UnitVector HashEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dim_, 0.0);
  const std::size_t buckets = dim_ - 1;
  auto tokens = tokenize_words(text);
  for (const auto& t : tokens) {
    const auto h = fnv1a(t);
    v[h % buckets] += (h >> 63) ? -1.0 : 1.0;
  }
  if (l2(v) == 0.0) v[dim_ - 1] = 1.0;
  return UnitVector::normalize(std::move(v));
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string api_key, std::string model, std::size_t dim)
    : base_(std::move(base_url)), key_(std::move(api_key)), model_(std::move(model)), dim_(dim) {}

UnitVector HttpEmbedder::embed(std::string_view text) const {
  http::Request req;
  std::string base = base_;
  while (!base.empty() && base.back() == '/') base.pop_back();
  req.url = base + "/embeddings";
  req.body = json{{"model", model_}, {"input", std::string(text)}}.dump();
  if (!key_.empty()) req.headers["Authorization"] = "Bearer " + key_;
  auto resp = http::post(req);
  if (resp.status != 200) {
    throw Error(resp.status == 401 || resp.status == 403 ? ErrorCode::kAuthFailure : ErrorCode::kServerError, kModule,
                "embedding request failed with HTTP " + std::to_string(resp.status));
  }
  try {
    auto j = json::parse(resp.body);
    auto v = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    if (v.size() != dim_) {
      throw Error(ErrorCode::kEmbedderMismatch, kModule,
                  "embedding has dim " + std::to_string(v.size()) + ", expected " + std::to_string(dim_));
    }
    return UnitVector::normalize(std::move(v));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, kModule, std::string("embedding response: ") + e.what());
  }
}

std::unique_ptr<Embedder> make_embedder(const std::string& id, std::size_t http_dim) {
  if (id.rfind("hash-", 0) == 0) {
    std::size_t dim = 0;
    try {
      dim = static_cast<std::size_t>(std::stoul(id.substr(5)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfig, kModule, "bad embedder id '" + id + "'");
    }
    return std::make_unique<HashEmbedder>(dim);
  }
  if (id.rfind("http:", 0) == 0) {
    auto opts = llm::HttpBackendOptions::from_env();
    return std::make_unique<HttpEmbedder>(opts.base_url, opts.api_key, id.substr(5), http_dim);
  }
  throw Error(ErrorCode::kConfig, kModule, "unknown embedder id '" + id + "'");
}

CorpusStore::CorpusStore(std::string diff_embedder, std::string text_embedder, std::size_t dim)
    : diff_embedder_(std::move(diff_embedder)), text_embedder_(std::move(text_embedder)), dim_(dim) {}

void CorpusStore::add(CorpusEntry entry) {
  if (entry.diff_embedding.dim() != dim_ || entry.message_embedding.dim() != dim_) {
    throw Error(ErrorCode::kEmbedderMismatch, kModule, "entry " + entry.entry_id + " has the wrong dimension");
  }
  entries_.push_back(std::move(entry));
}

std::string CorpusStore::serialize() const {
  std::string out;
  ordered_json header = {{"format", "cmo-corpus"},
                         {"version", 1},
                         {"diff_embedder", diff_embedder_},
                         {"text_embedder", text_embedder_},
                         {"dim", dim_}};
  out += header.dump() + "\n";
  for (const auto& e : entries_) {
    ordered_json j = {{"entry_id", e.entry_id},
                      {"repo", e.meta.repo},
                      {"commit_id", e.meta.commit_id},
                      {"timestamp", e.meta.timestamp},
                      {"diff_fingerprint", e.diff_fingerprint},
                      {"diff_text", e.diff_text},
                      {"message_text", e.message_text},
                      {"diff_embedding", e.diff_embedding.components()},
                      {"message_embedding", e.message_embedding.components()}};
    out += j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

void CorpusStore::save(const std::filesystem::path& path) const {
  const auto text = serialize();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, kModule, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(ErrorCode::kIo, kModule, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, kModule, "cannot rename to " + path.string() + ": " + ec.message());
}

CorpusStore CorpusStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot read corpus " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

CorpusStore CorpusStore::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::optional<CorpusStore> store;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorpusFormat, kModule, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!store) {
      if (j.value("format", "") != "cmo-corpus" || j.value("version", 0) != 1 || !j.contains("dim") ||
          !j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0) {
        throw Error(ErrorCode::kCorpusFormat, kModule, "missing or unsupported corpus header");
      }
      store.emplace(j.value("diff_embedder", ""), j.value("text_embedder", ""), j["dim"].get<std::size_t>());
      continue;
    }
    CorpusEntry e;
    try {
      e.entry_id = j.at("entry_id").get<std::string>();
      e.diff_text = j.at("diff_text").get<std::string>();
      e.message_text = j.at("message_text").get<std::string>();
      e.diff_fingerprint = j.value("diff_fingerprint", "");
      e.meta.repo = j.value("repo", "");
      e.meta.commit_id = j.value("commit_id", "");
      e.meta.timestamp = j.value("timestamp", "");
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kCorpusFormat, kModule, "line " + std::to_string(lineno) + ": " + ex.what());
    }
    if (e.diff_fingerprint != sha256_hex(e.diff_text)) {
      throw Error(ErrorCode::kCorpusFormat, kModule, "line " + std::to_string(lineno) + ": diff fingerprint mismatch");
    }
    if (!ids.insert(e.entry_id).second) {
      throw Error(ErrorCode::kCorpusFormat, kModule, "duplicate entry id " + e.entry_id);
    }
    e.diff_embedding = UnitVector::from_stored(read_vector(j, "diff_embedding", lineno));
    e.message_embedding = UnitVector::from_stored(read_vector(j, "message_embedding", lineno));
    store->add(std::move(e));
  }
  if (!store) throw Error(ErrorCode::kCorpusFormat, kModule, "empty corpus file (no header)");
  return std::move(*store);
}

void CorpusStore::check_embedders(const Embedder& diff_embedder, const Embedder& text_embedder) const {
  if (diff_embedder.id() != diff_embedder_ || text_embedder.id() != text_embedder_ || diff_embedder.dim() != dim_ ||
      text_embedder.dim() != dim_) {
    throw Error(ErrorCode::kEmbedderMismatch, kModule,
                "corpus built with (" + diff_embedder_ + ", " + text_embedder_ + ", dim " + std::to_string(dim_) +
                    ") but configured (" + diff_embedder.id() + ", " + text_embedder.id() + ")");
  }
}

std::vector<Neighbor> query_similar(const UnitVector& query, const CorpusStore& store, int k) {
  if (store.empty()) throw Error(ErrorCode::kEmptyCorpus, kModule, "corpus is empty");
  if (k <= 0) throw Error(ErrorCode::kPreconditionViolation, kModule, "k must be positive");
  std::vector<Neighbor> all;
  all.reserve(store.size());
  for (const auto& e : store.entries()) all.push_back({&e, cosine(query, e.diff_embedding)});
  auto by_rank = [](const Neighbor& a, const Neighbor& b) {
    if (a.cosine != b.cosine) return a.cosine > b.cosine;
    return a.entry->entry_id < b.entry->entry_id;
  };
  auto kk = static_cast<std::size_t>(k);
  if (kk > all.size()) {
    log::warn(kModule, "k=" + std::to_string(k) + " exceeds corpus size " + std::to_string(all.size()) +
                           "; returning the whole corpus");
    kk = all.size();
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kk), all.end(), by_rank);
  all.resize(kk);
  return all;
}

std::vector<Neighbor> query_similar(const CommitDiff& target, const CorpusStore& store, const Embedder& diff_embedder,
                                    int k) {
  if (store.empty()) throw Error(ErrorCode::kEmptyCorpus, kModule, "corpus is empty");
  if (diff_embedder.id() != store.diff_embedder_id() || diff_embedder.dim() != store.dim()) {
    throw Error(ErrorCode::kEmbedderMismatch, kModule,
                "diff embedder " + diff_embedder.id() + " does not match corpus " + store.diff_embedder_id());
  }
  return query_similar(diff_embedder.embed(target.raw_text), store, k);
}

double sim_score(const UnitVector& candidate, const std::vector<const CorpusEntry*>& retrieved) {
  if (retrieved.empty()) throw Error(ErrorCode::kEmptyRetrieval, kModule, "no retrieved entries");
  double sum = 0.0;
  for (const auto* e : retrieved) sum += cosine(candidate, e->message_embedding);
  return std::clamp(sum / static_cast<double>(retrieved.size()), -1.0, 1.0);
}

double sim_score(std::string_view candidate_message, const std::vector<const CorpusEntry*>& retrieved,
                 const Embedder& text_embedder) {
  if (retrieved.empty()) throw Error(ErrorCode::kEmptyRetrieval, kModule, "no retrieved entries");
  return sim_score(text_embedder.embed(candidate_message), retrieved);
}

WhatWhy classify_what_why_rules(std::string_view message) {
  static const std::set<std::string> verbs = {
      "add",      "fix",     "remove",   "update",    "change",   "refactor", "implement", "improve", "use",
      "make",     "move",    "rename",   "support",   "allow",    "avoid",    "handle",    "clean",   "replace",
      "introduce", "enable", "disable",  "correct",   "simplify", "optimize", "extract",   "revert",  "bump",
      "upgrade",  "document", "test",    "prevent",   "ensure",   "set",      "create",    "delete",  "drop",
      "convert",  "reduce",  "increase", "check",     "validate", "deprecate", "migrate",  "expose",  "return",
      "skip",     "ignore",  "include",  "reformat",  "tweak",    "adjust",   "polish",    "resolve", "log",
      "cache",    "close",   "release",  "merge",     "split",    "initialize", "register", "reuse",  "restore",
      "catch",    "guard",   "limit",    "sort",      "throw",    "wrap",     "pass",      "read",    "write",
      "load",     "store",   "print",    "show",      "hide",     "format",   "apply",     "provide", "call"};
  WhatWhy r;
  const std::string msg = trim(message);
  if (msg.empty()) return r;

  std::string subject = msg.substr(0, msg.find('\n'));
  static const std::regex conventional(R"(^\s*[A-Za-z]+(\([^)]*\))?!?:\s*)");
  subject = std::regex_replace(subject, conventional, "", std::regex_constants::format_first_only);
  auto words = tokenize_words(subject);
  if (!words.empty()) {
    const std::string& w = words.front();
    auto stem_matches = [&](std::size_t cut) { return w.size() > cut && verbs.count(w.substr(0, w.size() - cut)); };
    r.what = verbs.count(w) > 0 ||
             (w.size() > 2 && w.compare(w.size() - 2, 2, "es") == 0 && stem_matches(2)) ||
             (w.back() == 's' && stem_matches(1)) ||
             (w.size() > 2 && w.compare(w.size() - 2, 2, "ed") == 0 && (stem_matches(2) || stem_matches(1))) ||
             (w.size() > 3 && w.compare(w.size() - 3, 3, "ing") == 0 && stem_matches(3));
  }

  const std::string lower = to_lower(msg);
  static const std::regex why_cue(
      R"(\b(because|since|so that|to avoid|to fix|otherwise)\b|\b(fix|fixes|fixed|close|closes|closed)\s+(#\d+|[a-z]+-\d+)\b)");
  r.why = std::regex_search(lower, why_cue);
  return r;
}

WhatWhy LlmWhatWhyClassifier::classify(std::string_view message) {
  if (trim(message).empty()) return {};
  std::string system =
      "You judge commit messages. 'what' is true when the message summarizes what the code change does. 'why' is "
      "true when it states the reason or motivation for the change. Reply with JSON only: "
      "{\"what\": true|false, \"why\": true|false}.";
  std::string user = "## Commit message\n" + std::string(message) + "\n";
  try {
    auto resp = client_.chat(llm::make_request(system, user, 0.0, "", 32));
    auto text = trim(resp.content);
    auto a = text.find('{');
    auto b = text.rfind('}');
    if (a == std::string::npos || b == std::string::npos || b < a) {
      throw Error(ErrorCode::kMalformedResponse, kModule, "no JSON object in classifier answer");
    }
    auto j = json::parse(text.substr(a, b - a + 1));
    WhatWhy r;
    r.what = j.at("what").get<bool>();
    r.why = j.at("why").get<bool>();
    return r;
  } catch (const std::exception& e) {
    log::warn(kModule, std::string("what/why classifier failed, using rules: ") + e.what());
    auto r = classify_what_why_rules(message);
    r.fallback = true;
    return r;
  }
}

std::vector<CorpusInput> read_corpus_inputs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot read " + path.string());
  std::vector<CorpusInput> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      CorpusInput c;
      c.diff_text = j.at("diff").get<std::string>();
      c.message = j.at("message").get<std::string>();
      c.meta.repo = j.value("repo", "");
      c.meta.commit_id = j.value("commit_id", "");
      if (j.contains("timestamp")) {
        c.meta.timestamp = j["timestamp"].is_string() ? j["timestamp"].get<std::string>() : j["timestamp"].dump();
      }
      out.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kCorpusFormat, kModule,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

CorpusStore build_corpus(const std::vector<CorpusInput>& inputs, const Embedder& diff_embedder,
                         const Embedder& text_embedder, WhatWhyClassifier& classifier,
                         const std::filesystem::path& out_path, int jobs, BuildStats* stats) {
  if (diff_embedder.dim() != text_embedder.dim()) {
    throw Error(ErrorCode::kEmbedderMismatch, kModule, "diff and text embedders must share one dimension");
  }
  enum class Outcome { kKept, kFiltered, kFailed };
  std::vector<Outcome> outcome(inputs.size(), Outcome::kFailed);
  std::vector<std::optional<CorpusEntry>> built(inputs.size());

  auto work = [&](std::size_t i) {
    const auto& in = inputs[i];
    auto ww = classifier.classify(in.message);
    if (!(ww.what && ww.why)) {
      outcome[i] = Outcome::kFiltered;
      return;
    }
    try {
      CorpusEntry e;
      e.diff_text = in.diff_text;
      e.diff_fingerprint = sha256_hex(in.diff_text);
      e.message_text = in.message;
      e.meta = in.meta;
      e.diff_embedding = diff_embedder.embed(in.diff_text);
      e.message_embedding = text_embedder.embed(in.message);
      built[i] = std::move(e);
      outcome[i] = Outcome::kKept;
    } catch (const Error& err) {
      log::warn(kModule, "skipping input " + std::to_string(i + 1) + ": " + err.what());
      outcome[i] = Outcome::kFailed;
    }
  };

  const auto n_threads = static_cast<std::size_t>(std::max(1, jobs));
  if (n_threads == 1 || inputs.size() < 2) {
    for (std::size_t i = 0; i < inputs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, inputs.size()); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  CorpusStore store(diff_embedder.id(), text_embedder.id(), diff_embedder.dim());
  std::set<std::string> ids;
  BuildStats s;
  s.inputs = inputs.size();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (outcome[i] == Outcome::kFiltered) ++s.filtered;
    if (outcome[i] == Outcome::kFailed) ++s.failed;
    if (outcome[i] != Outcome::kKept) continue;
    auto& e = *built[i];
    std::string id = (!e.meta.repo.empty() && !e.meta.commit_id.empty()) ? e.meta.repo + "@" + e.meta.commit_id
                                                                         : "entry-" + std::to_string(i + 1);
    if (ids.count(id)) id += "#" + std::to_string(i + 1);
    ids.insert(id);
    e.entry_id = id;
    store.add(std::move(e));
    ++s.kept;
  }
  if (!out_path.empty()) store.save(out_path);
  if (stats != nullptr) *stats = s;
  return store;
}

}  // namespace cmo
