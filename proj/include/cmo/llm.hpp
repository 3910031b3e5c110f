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

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cmo/digest.hpp"
#include "cmo/error.hpp"

namespace cmo::llm {

enum class Role { kSystem, kUser, kAssistant };

std::string_view role_name(Role role);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model_id;

  // Throws Error(kPreconditionViolation) on an empty conversation, a leading
  // assistant turn, negative temperature or non-positive max_tokens.
  void validate() const;

  // Digest of every field; the response cache key.
  Digest256 cache_key() const;
  // Digest of the messages only; what mock scripts are keyed by.
  Digest256 prompt_digest() const;
};

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::string finish_reason = "stop";
  TokenUsage usage;
  bool from_cache = false;
};

// Error raised by a backend. Rate-limit replies may carry a retry hint.
class BackendError : public Error {
 public:
  BackendError(ErrorCode code, const std::string& message,
               std::optional<std::chrono::milliseconds> retry_after = std::nullopt)
      : Error(code, "llm_backend", message), retry_after_(retry_after) {}

  std::optional<std::chrono::milliseconds> retry_after() const { return retry_after_; }

 private:
  std::optional<std::chrono::milliseconds> retry_after_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // One attempt, no caching or retries. Implementations must be thread-safe.
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

// Scripted, deterministic backend for tests and offline runs. Lookup order:
// queued failures, digest table, responder, substring rules, ordered sequence.
// Anything unscripted raises Error(kMockMiss).
class MockBackend : public ChatBackend {
 public:
  using Responder = std::function<std::optional<std::string>(const ChatRequest&)>;

  MockBackend() = default;

  // Accepts either {"<prompt digest hex>": "response", ...}, a JSON array of
  // responses served in order, or an object with optional "digests",
  // "sequence" and "rules" ([{"contains": s, "response": r}]) members.
  static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);
  static std::shared_ptr<MockBackend> from_json_text(const std::string& text);

  void script(const Digest256& prompt_digest, std::string response);
  void script(const ChatRequest& req, std::string response);
  void push_sequence(std::string response);
  void add_rule(std::string contains, std::string response);
  void set_responder(Responder responder);
  void fail_next(int count, ErrorCode code);

  ChatResponse complete(const ChatRequest& req) override;

  int calls() const;
  std::vector<ChatRequest> transcript() const;

 private:
  mutable std::mutex mu_;
  std::map<Digest256, std::string> by_digest_;
  std::vector<std::pair<std::string, std::string>> rules_;
  std::deque<std::string> sequence_;
  std::deque<ErrorCode> failures_;
  Responder responder_;
  std::vector<ChatRequest> transcript_;
  int calls_ = 0;
};

struct HttpBackendOptions {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string api_key;
  std::string default_model;
  std::chrono::milliseconds timeout{120000};

  // CMO_LLM_BASE_URL, CMO_LLM_API_KEY, CMO_LLM_MODEL.
  static HttpBackendOptions from_env();
};

// Chat-completions JSON over HTTP: POST <base>/chat/completions with a bearer token.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendOptions opts);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  HttpBackendOptions opts_;
};

// Content-addressed response store: in memory, optionally mirrored to
// <dir>/<aa>/<digest>.json with write-temp-then-rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

  std::optional<ChatResponse> get(const Digest256& key);
  void put(const Digest256& key, const ChatResponse& resp);

 private:
  std::filesystem::path file_for(const Digest256& key) const;

  std::mutex mu_;
  std::map<Digest256, ChatResponse> memory_;
  std::optional<std::filesystem::path> dir_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{60000};
};

struct ClientOptions {
  RetryPolicy retry;
  bool cache_enabled = true;
  std::optional<std::filesystem::path> cache_dir;  // defaults to $CMO_CACHE_DIR when set
  std::function<void(std::chrono::milliseconds)> sleep;  // injectable for tests
};

// The entry point every prompt goes through: temperature-0 requests are
// served from / stored into the cache, transient failures are retried with
// exponential backoff.
class ChatClient {
 public:
  explicit ChatClient(std::shared_ptr<ChatBackend> backend, ClientOptions opts = {});

  ChatResponse chat(const ChatRequest& req);

  int backend_calls() const { return backend_calls_.load(); }
  const std::string& default_model() const { return default_model_; }
  void set_default_model(std::string model) { default_model_ = std::move(model); }

 private:
  std::shared_ptr<ChatBackend> backend_;
  ClientOptions opts_;
  ResponseCache cache_;
  std::atomic<int> backend_calls_{0};
  std::string default_model_;
};

// Convenience for single-turn prompts.
ChatRequest make_request(std::string system, std::string user, double temperature, std::string model_id,
                         int max_tokens = 1024);

}  // namespace cmo::llm
