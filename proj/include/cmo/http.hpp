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

#include <chrono>
#include <map>
#include <optional>
#include <string>

namespace cmo::http {

struct Response {
  int status = 0;
  std::string body;
  std::multimap<std::string, std::string> headers;

  std::optional<std::string> header(const std::string& name) const;
};

struct Request {
  std::string url;  // absolute http(s) URL
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
  std::chrono::milliseconds timeout{60000};
};

// Transport failures (DNS, refused, timeout) throw Error(kTimeout).
// HTTP error statuses are returned, not thrown.
Response post(const Request& req);
Response get(const Request& req);

}  // namespace cmo::http
