// Copyright 2026 The litrev Authors.
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

namespace litrev {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kNotFound,
  // llm gateway
  kProviderUnavailable,
  kMockMiss,
  kBudgetExceeded,
  // query generation
  kUnparseableResponse,
  // retrieval
  kBackendUnavailable,
  kEmptyInput,
  kPoolUnderflow,
  // embedding store
  kDimensionMismatch,
  kCorruptDump,
  kNoQueryVector,
  // reranking
  kUnparseableVerdict,
  // generation
  kMalformedPlan,
  kPlanMissing,
  kUnknownKeyInText,
  kNoCitationsFound,
  // evaluation
  kUndefinedMetric,
  kAlignmentError,
  // dataset builder
  kIngestError,
};

/// Stable, wire-visible name of an error code ("MalformedPlan", ...).
std::string_view ErrorCodeName(ErrorCode code);

/// Base exception for every failure raised by the library. `stage()` is
/// empty until a pipeline boundary labels it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  Error WithStage(std::string stage) const {
    return Error(code_, what(), std::move(stage));
  }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace litrev
