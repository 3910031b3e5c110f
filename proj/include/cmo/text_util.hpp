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

#include <string>
#include <string_view>
#include <vector>

namespace cmo {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Cuts `s` to at most `max_bytes` without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string_view s, std::size_t max_bytes);

// Lowercased word tokens; every ASCII punctuation character is its own token.
std::vector<std::string> tokenize_words(std::string_view s);

// Approximate token budget for prompts: 4 bytes per token, head first.
// Appends a marker line when text was dropped.
std::string truncate_for_prompt(std::string_view s, int max_tokens, bool* truncated = nullptr);

}  // namespace cmo
