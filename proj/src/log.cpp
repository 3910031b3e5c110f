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

#include "cmo/log.hpp"

#include <iostream>
#include <mutex>

namespace cmo::log {
namespace {

std::mutex& mu() {
  static std::mutex m;
  return m;
}
Sink& sink() {
  static Sink s;
  return s;
}
Level& min_level() {
  static Level l = Level::kWarn;
  return l;
}

std::string_view level_name(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warning";
    case Level::kError: return "error";
  }
  return "?";
}

}  // namespace

void set_sink(Sink s) {
  std::lock_guard lock(mu());
  sink() = std::move(s);
}

void reset_sink() { set_sink(nullptr); }

void set_min_level(Level level) {
  std::lock_guard lock(mu());
  min_level() = level;
}

void write(Level level, std::string_view module, std::string_view message) {
  std::lock_guard lock(mu());
  if (sink()) {
    sink()(level, module, message);
    return;
  }
  if (level < min_level()) return;
  std::cerr << "[" << module << "] " << level_name(level) << ": " << message << '\n';
}

}  // namespace cmo::log
