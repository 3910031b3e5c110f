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

#include <functional>
#include <string>
#include <string_view>

namespace cmo::log {

enum class Level { kDebug, kInfo, kWarn, kError };

using Sink = std::function<void(Level, std::string_view module, std::string_view message)>;

// Diagnostics go to stderr unless a sink is installed (tests capture them).
void set_sink(Sink sink);
void reset_sink();
void set_min_level(Level level);

void write(Level level, std::string_view module, std::string_view message);

inline void debug(std::string_view module, std::string_view message) {
  write(Level::kDebug, module, message);
}
inline void info(std::string_view module, std::string_view message) {
  write(Level::kInfo, module, message);
}
inline void warn(std::string_view module, std::string_view message) {
  write(Level::kWarn, module, message);
}
inline void error(std::string_view module, std::string_view message) {
  write(Level::kError, module, message);
}

}  // namespace cmo::log
