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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "cmo/http.hpp"

#include "cmo/error.hpp"

namespace cmo::http {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfig, "http", "not an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

Response send(const Request& req, bool is_post) {
  auto [origin, path] = split_url(req.url);
  httplib::Client client(origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(req.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  for (const auto& [k, v] : req.headers) headers.emplace(k, v);

  auto result = is_post ? client.Post(path, headers, req.body, req.content_type) : client.Get(path, headers);
  if (!result) {
    throw Error(ErrorCode::kTimeout, "http",
                (is_post ? "POST " : "GET ") + req.url + ": " + httplib::to_string(result.error()));
  }
  Response out;
  out.status = result->status;
  out.body = result->body;
  for (const auto& [k, v] : result->headers) out.headers.emplace(k, v);
  return out;
}

}  // namespace

std::optional<std::string> Response::header(const std::string& name) const {
  for (const auto& [k, v] : headers) {
    if (k.size() == name.size() &&
        std::equal(k.begin(), k.end(), name.begin(), [](char a, char b) { return std::tolower(a) == std::tolower(b); })) {
      return v;
    }
  }
  return std::nullopt;
}

Response post(const Request& req) { return send(req, true); }
Response get(const Request& req) { return send(req, false); }

}  // namespace cmo::http
