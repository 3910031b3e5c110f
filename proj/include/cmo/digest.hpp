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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace cmo {

// SHA-256 digest. Used as cache key for diffs, prompts and messages.
class Digest256 {
 public:
  Digest256() = default;
  explicit Digest256(const std::array<std::uint8_t, 32>& bytes) : bytes_(bytes) {}

  static Digest256 of(std::string_view data);

  const std::array<std::uint8_t, 32>& bytes() const { return bytes_; }
  std::string hex() const;

  friend bool operator==(const Digest256&, const Digest256&) = default;
  friend auto operator<=>(const Digest256&, const Digest256&) = default;

 private:
  std::array<std::uint8_t, 32> bytes_{};
};

std::string sha256_hex(std::string_view data);

}  // namespace cmo
