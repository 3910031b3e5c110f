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

#include "cmo/error.hpp"

namespace cmo {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedDiff: return "MalformedDiff";
    case ErrorCode::kEmptyDiff: return "EmptyDiff";
    case ErrorCode::kInvalidCommitId: return "InvalidCommitId";
    case ErrorCode::kRepoNotFound: return "RepoNotFound";
    case ErrorCode::kCommitNotFound: return "CommitNotFound";
    case ErrorCode::kMergeCommit: return "MergeCommit";
    case ErrorCode::kBinaryOnlyCommit: return "BinaryOnlyCommit";
    case ErrorCode::kProcessFailed: return "ProcessFailed";
    case ErrorCode::kPreconditionViolation: return "PreconditionViolation";
    case ErrorCode::kUnparseableLabel: return "UnparseableLabel";
    case ErrorCode::kSummarizerUnavailable: return "SummarizerUnavailable";
    case ErrorCode::kForgeUnreachable: return "ForgeUnreachable";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kEmptyRetrieval: return "EmptyRetrieval";
    case ErrorCode::kEmbedderMismatch: return "EmbedderMismatch";
    case ErrorCode::kCorpusFormat: return "CorpusFormat";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kUnparseableScore: return "UnparseableScore";
    case ErrorCode::kZeroWeights: return "ZeroWeights";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kEmptyAfterTokenization: return "EmptyAfterTokenization";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kServerError: return "ServerError";
    case ErrorCode::kMockMiss: return "MockMiss";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string module, const std::string& message)
    : std::runtime_error(message), code_(code), module_(std::move(module)) {}

bool Error::transient() const {
  return code_ == ErrorCode::kTimeout || code_ == ErrorCode::kRateLimited ||
         code_ == ErrorCode::kServerError;
}

}  // namespace cmo
