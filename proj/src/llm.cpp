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

#include "cmo/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "cmo/http.hpp"
#include "cmo/log.hpp"
#include "json.hpp"

namespace cmo::llm {
namespace {

using nlohmann::ordered_json;

constexpr std::string_view kModule = "llm_backend";

ordered_json messages_json(const std::vector<ChatMessage>& messages) {
  auto arr = ordered_json::array();
  for (const auto& m : messages) {
    arr.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  return arr;
}

std::string getenv_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : fallback;
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

void ChatRequest::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kPreconditionViolation, std::string(kModule), "invalid chat request: " + what);
  };
  if (messages.empty()) fail("no messages");
  if (messages.front().role == Role::kAssistant) fail("first message must be system or user");
  if (temperature < 0.0) fail("negative temperature");
  if (max_tokens <= 0) fail("max_tokens must be positive");
}

Digest256 ChatRequest::cache_key() const {
  ordered_json j = {{"model", model_id},
                    {"temperature", temperature},
                    {"max_tokens", max_tokens},
                    {"messages", messages_json(messages)}};
  return Digest256::of(j.dump());
}

Digest256 ChatRequest::prompt_digest() const { return Digest256::of(messages_json(messages).dump()); }

ChatRequest make_request(std::string system, std::string user, double temperature, std::string model_id,
                         int max_tokens) {
  ChatRequest req;
  if (!system.empty()) req.messages.push_back({Role::kSystem, std::move(system)});
  req.messages.push_back({Role::kUser, std::move(user)});
  req.temperature = temperature;
  req.model_id = std::move(model_id);
  req.max_tokens = max_tokens;
  return req;
}

// ---------------------------------------------------------------------------
// MockBackend

std::shared_ptr<MockBackend> MockBackend::from_json_text(const std::string& text) {
  auto mock = std::make_shared<MockBackend>();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string(kModule), std::string("bad mock script: ") + e.what());
  }
  auto load_digests = [&](const nlohmann::json& obj) {
    for (const auto& [hex, resp] : obj.items()) {
      if (hex.size() != 64) {
        throw Error(ErrorCode::kConfig, std::string(kModule), "mock digest must be 64 hex chars: " + hex);
      }
      std::array<std::uint8_t, 32> bytes{};
      for (std::size_t i = 0; i < 32; ++i) bytes[i] = static_cast<std::uint8_t>(std::stoi(hex.substr(2 * i, 2), nullptr, 16));
      mock->script(Digest256(bytes), resp.get<std::string>());
    }
  };
  if (j.is_array()) {
    for (const auto& r : j) mock->push_sequence(r.get<std::string>());
  } else if (j.is_object() && (j.contains("digests") || j.contains("sequence") || j.contains("rules"))) {
    if (j.contains("digests")) load_digests(j["digests"]);
    if (j.contains("sequence")) {
      for (const auto& r : j["sequence"]) mock->push_sequence(r.get<std::string>());
    }
    if (j.contains("rules")) {
      for (const auto& r : j["rules"]) {
        mock->add_rule(r.at("contains").get<std::string>(), r.at("response").get<std::string>());
      }
    }
  } else if (j.is_object()) {
    load_digests(j);
  } else {
    throw Error(ErrorCode::kConfig, std::string(kModule), "mock script must be a JSON object or array");
  }
  return mock;
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, std::string(kModule), "cannot read mock script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void MockBackend::script(const Digest256& prompt_digest, std::string response) {
  std::lock_guard lock(mu_);
  by_digest_[prompt_digest] = std::move(response);
}

void MockBackend::script(const ChatRequest& req, std::string response) { script(req.prompt_digest(), std::move(response)); }

void MockBackend::push_sequence(std::string response) {
  std::lock_guard lock(mu_);
  sequence_.push_back(std::move(response));
}

void MockBackend::add_rule(std::string contains, std::string response) {
  std::lock_guard lock(mu_);
  rules_.emplace_back(std::move(contains), std::move(response));
}

void MockBackend::set_responder(Responder responder) {
  std::lock_guard lock(mu_);
  responder_ = std::move(responder);
}

void MockBackend::fail_next(int count, ErrorCode code) {
  std::lock_guard lock(mu_);
  for (int i = 0; i < count; ++i) failures_.push_back(code);
}

ChatResponse MockBackend::complete(const ChatRequest& req) {
  Responder responder;
  {
    std::lock_guard lock(mu_);
    ++calls_;
    transcript_.push_back(req);
    if (!failures_.empty()) {
      auto code = failures_.front();
      failures_.pop_front();
      throw BackendError(code, "scripted failure");
    }
    if (auto it = by_digest_.find(req.prompt_digest()); it != by_digest_.end()) {
      return {it->second, "stop", {}, false};
    }
    responder = responder_;
  }
  if (responder) {
    if (auto r = responder(req)) return {*r, "stop", {}, false};
  }
  std::lock_guard lock(mu_);
  const std::string& last = req.messages.back().content;
  for (const auto& [needle, resp] : rules_) {
    if (last.find(needle) != std::string::npos) return {resp, "stop", {}, false};
  }
  if (!sequence_.empty()) {
    auto r = std::move(sequence_.front());
    sequence_.pop_front();
    return {std::move(r), "stop", {}, false};
  }
  throw BackendError(ErrorCode::kMockMiss, "no scripted response for prompt digest " + req.prompt_digest().hex());
}

int MockBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<ChatRequest> MockBackend::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

// ---------------------------------------------------------------------------
// HttpBackend

HttpBackendOptions HttpBackendOptions::from_env() {
  HttpBackendOptions o;
  o.base_url = getenv_or("CMO_LLM_BASE_URL", "https://api.openai.com/v1");
  o.api_key = getenv_or("CMO_LLM_API_KEY");
  o.default_model = getenv_or("CMO_LLM_MODEL", "gpt-4");
  return o;
}

HttpBackend::HttpBackend(HttpBackendOptions opts) : opts_(std::move(opts)) {
  while (!opts_.base_url.empty() && opts_.base_url.back() == '/') opts_.base_url.pop_back();
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  ordered_json body = {{"model", req.model_id.empty() ? opts_.default_model : req.model_id},
                       {"messages", messages_json(req.messages)},
                       {"temperature", req.temperature},
                       {"max_tokens", req.max_tokens}};
  http::Request hr;
  hr.url = opts_.base_url + "/chat/completions";
  hr.body = body.dump();
  hr.timeout = opts_.timeout;
  if (!opts_.api_key.empty()) hr.headers["Authorization"] = "Bearer " + opts_.api_key;

  http::Response resp;
  try {
    resp = http::post(hr);
  } catch (const Error& e) {
    throw BackendError(ErrorCode::kTimeout, e.what());
  }

  if (resp.status == 401 || resp.status == 403) {
    throw BackendError(ErrorCode::kAuthFailure, "HTTP " + std::to_string(resp.status) + " from " + hr.url);
  }
  if (resp.status == 429) {
    std::optional<std::chrono::milliseconds> hint;
    if (auto ra = resp.header("Retry-After")) {
      try {
        hint = std::chrono::milliseconds(static_cast<long long>(std::stod(*ra) * 1000.0));
      } catch (const std::exception&) {
      }
    }
    throw BackendError(ErrorCode::kRateLimited, "HTTP 429 from " + hr.url, hint);
  }
  if (resp.status == 408) throw BackendError(ErrorCode::kTimeout, "HTTP 408 from " + hr.url);
  if (resp.status >= 500) {
    throw BackendError(ErrorCode::kServerError, "HTTP " + std::to_string(resp.status) + " from " + hr.url);
  }
  if (resp.status != 200) {
    throw BackendError(ErrorCode::kMalformedResponse,
                       "HTTP " + std::to_string(resp.status) + " from " + hr.url + ": " + resp.body.substr(0, 200));
  }

  try {
    auto j = nlohmann::json::parse(resp.body);
    const auto& choice = j.at("choices").at(0);
    ChatResponse out;
    const auto& content = choice.at("message").at("content");
    out.content = content.is_null() ? std::string() : content.get<std::string>();
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
      out.finish_reason = choice["finish_reason"].get<std::string>();
    }
    if (j.contains("usage") && j["usage"].is_object()) {
      out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      out.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    if (out.finish_reason == "stop" && content.is_null()) {
      throw BackendError(ErrorCode::kMalformedResponse, "normal stop without content");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(ErrorCode::kMalformedResponse, std::string("unexpected response body: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {}

std::filesystem::path ResponseCache::file_for(const Digest256& key) const {
  auto hex = key.hex();
  return *dir_ / hex.substr(0, 2) / (hex + ".json");
}

std::optional<ChatResponse> ResponseCache::get(const Digest256& key) {
  std::lock_guard lock(mu_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (!dir_) return std::nullopt;
  std::ifstream in(file_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(in);
    ChatResponse r;
    r.content = j.at("content").get<std::string>();
    r.finish_reason = j.value("finish_reason", "stop");
    r.usage.prompt_tokens = j.value("prompt_tokens", 0);
    r.usage.completion_tokens = j.value("completion_tokens", 0);
    memory_[key] = r;
    return r;
  } catch (const nlohmann::json::exception&) {
    log::warn(kModule, "ignoring corrupt cache entry " + file_for(key).string());
    return std::nullopt;
  }
}

void ResponseCache::put(const Digest256& key, const ChatResponse& resp) {
  std::lock_guard lock(mu_);
  memory_[key] = resp;
  if (!dir_) return;
  auto target = file_for(key);
  std::error_code ec;
  std::filesystem::create_directories(target.parent_path(), ec);
  auto tmp = target;
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  tmp += suffix.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      log::warn(kModule, "cannot write cache entry " + tmp.string());
      return;
    }
    ordered_json j = {{"content", resp.content},
                      {"finish_reason", resp.finish_reason},
                      {"prompt_tokens", resp.usage.prompt_tokens},
                      {"completion_tokens", resp.usage.completion_tokens}};
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) log::warn(kModule, "cannot publish cache entry " + target.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// ChatClient

ChatClient::ChatClient(std::shared_ptr<ChatBackend> backend, ClientOptions opts)
    : backend_(std::move(backend)),
      opts_(std::move(opts)),
      cache_([&]() -> std::optional<std::filesystem::path> {
        if (opts_.cache_dir) return opts_.cache_dir;
        auto env = getenv_or("CMO_CACHE_DIR");
        if (!env.empty()) return std::filesystem::path(env);
        return std::nullopt;
      }()) {
  if (!opts_.sleep) {
    opts_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

ChatResponse ChatClient::chat(const ChatRequest& in) {
  ChatRequest req = in;
  if (req.model_id.empty()) req.model_id = default_model_;
  req.validate();

  const bool cacheable = opts_.cache_enabled && req.temperature == 0.0;
  const auto key = req.cache_key();
  if (cacheable) {
    if (auto hit = cache_.get(key)) {
      hit->from_cache = true;
      return *hit;
    }
  }

  auto delay = opts_.retry.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      ++backend_calls_;
      auto resp = backend_->complete(req);
      resp.from_cache = false;
      if (cacheable) cache_.put(key, resp);
      return resp;
    } catch (const BackendError& e) {
      if (!e.transient() || attempt >= opts_.retry.max_attempts) throw;
      auto wait = e.retry_after().value_or(delay);
      log::info(kModule, std::string(error_code_name(e.code())) + " on attempt " + std::to_string(attempt) +
                             ", retrying in " + std::to_string(wait.count()) + " ms");
      opts_.sleep(wait);
      delay = std::min(opts_.retry.max_delay,
                       std::chrono::milliseconds(static_cast<long long>(delay.count() * opts_.retry.multiplier)));
    }
  }
}

}  // namespace cmo::llm
