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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmo {

enum class ErrorCode {
  kMalformedDiff,
  kEmptyDiff,
  kInvalidCommitId,
  kRepoNotFound,
  kCommitNotFound,
  kMergeCommit,
  kBinaryOnlyCommit,
  kProcessFailed,
  kPreconditionViolation,
  kUnparseableLabel,
  kSummarizerUnavailable,
  kForgeUnreachable,
  kEmptyCorpus,
  kEmptyRetrieval,
  kEmbedderMismatch,
  kCorpusFormat,
  kIo,
  kUnparseableScore,
  kZeroWeights,
  kEmptyDataset,
  kEmptyAfterTokenization,
  kTimeout,
  kRateLimited,
  kAuthFailure,
  kMalformedResponse,
  kServerError,
  kMockMiss,
  kConfig,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the toolkit carries a code and the module that
// raised it, so the CLI can print "[module] Code: message" diagnostics.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message);

  ErrorCode code() const { return code_; }
  const std::string& module() const { return module_; }

  // True for backend failures worth retrying (rate limits, timeouts, 5xx).
  bool transient() const;

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace cmo
