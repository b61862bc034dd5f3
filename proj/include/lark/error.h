// Copyright 2026 The Lark Authors. All Rights Reserved.
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

namespace lark {

enum class ErrorCode {
  kInternal,
  // hyperparams
  kDuplicateKey,
  kSealedParams,
  kInvalidKeyName,
  kUnknownKey,
  kTypeMismatch,
  kParseError,
  kMissingCls,
  kMissingName,
  // nestedmap
  kLengthMismatch,
  // tensor
  kShapeMismatch,
  kDTypeMismatch,
  kIndexOutOfRange,
  kNotScalarLoss,
  kNumericsError,
  // layers
  kDuplicateVariable,
  kPostConstructionCreate,
  kDuplicateChild,
  // input
  kUnknownReaderKind,
  kNoFilesMatched,
  kVocabMissingSpecialToken,
  // model
  kSharedShapeMismatch,
  kCheckpointMissingVariable,
  // registry
  kDuplicateModelName,
  kUnknownModel,
  kUnknownDataset,
  // runners
  kCorruptCheckpoint,
  kIoError,
  kUnavailablePs,
  kWorkerFailure,
  // quant
  kUninitializedDomain,
  kFrozenDomain,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

// Internal invariant check; not subject to --enable_asserts.
#define LARK_CHECK(cond)                                             \
  do {                                                               \
    if (!(cond)) {                                                   \
      ::lark::Fail(::lark::ErrorCode::kInternal,                     \
                   std::string("check failed: " #cond " at ") +      \
                       __FILE__ + ":" + std::to_string(__LINE__));   \
    }                                                                \
  } while (0)

}  // namespace lark
