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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace litrev::llm {

struct CompletionRequest {
  std::string system_text;
  std::string user_text;
  int max_output_tokens = 1024;
  double temperature = 0.0;
  std::string model_id;
  std::optional<std::int64_t> seed;

  /// Throws Error(kInvalidArgument) on a violated field invariant.
  void Validate() const;
};

struct TokenCounts {
  std::int64_t input = 0;
  std::int64_t output = 0;
  std::int64_t total() const { return input + output; }
};

struct CompletionResult {
  std::string text;
  TokenCounts tokens;
  std::int64_t latency_ms = 0;
  int attempt = 1;
};

/// What a backend hands back for a single dispatch. `status == 0` marks a
/// transport failure.
struct BackendReply {
  int status = 200;
  std::string text;
  std::string error;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual BackendReply Send(const CompletionRequest& req) = 0;
  virtual std::string Name() const = 0;
};

struct MockEntry {
  // Exactly one matcher is set.
  std::optional<std::string> substring;
  std::optional<int> ordinal;  // 1-based request number
  std::string response;
};

struct MockScript {
  std::vector<MockEntry> entries;
  bool strict = false;

  /// `{"strict": bool, "entries": [{"match": "text"|"ordinal": n, "response": "..."}]}`
  static MockScript FromJson(const nlohmann::json& j);
  static MockScript FromFile(const std::filesystem::path& path);
};

/// Deterministic scripted mock. Substring matchers test the concatenation of
/// system and user text. Strict scripts require exactly one matching entry;
/// lax scripts take the first match and answer "" when nothing matches.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(MockScript script);
  BackendReply Send(const CompletionRequest& req) override;
  std::string Name() const override { return "mock"; }
  int requests_seen() const;

 private:
  MockScript script_;
  mutable std::mutex mu_;
  int seen_ = 0;
};

/// Programmable mock for tests that need per-request logic. `ordinal` is
/// the 1-based dispatch number.
class CallbackBackend : public ChatBackend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&, int ordinal)>;
  explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}
  BackendReply Send(const CompletionRequest& req) override;
  std::string Name() const override { return "mock-callback"; }

 private:
  Fn fn_;
  std::mutex mu_;
  int seen_ = 0;
};

struct ProviderConfig {
  std::string endpoint;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::string model_id;
  double timeout_seconds = 120.0;

  static ProviderConfig FromJson(const nlohmann::json& j);
  /// LITREV_LLM_ENDPOINT, LITREV_LLM_API_KEY, LITREV_LLM_MODEL override.
  void ApplyEnvironment();
};

/// OpenAI-compatible chat-completions client.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(ProviderConfig cfg);
  BackendReply Send(const CompletionRequest& req) override;
  std::string Name() const override { return "http:" + cfg_.endpoint; }

 private:
  ProviderConfig cfg_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
};

struct GatewayOptions {
  RetryPolicy retry;
  std::optional<std::int64_t> token_budget;
  std::optional<std::filesystem::path> transcript_path;
  /// Minimum spacing between dispatches; zero disables rate limiting.
  std::chrono::milliseconds min_dispatch_interval{0};
  /// Timestamp source for transcript entries (ISO-8601 UTC by default).
  std::function<std::string()> clock;
  std::function<void(std::chrono::milliseconds)> sleep;
  std::string default_model_id;
};

struct TranscriptEntry {
  nlohmann::json request;
  nlohmann::json response;
  TokenCounts tokens;
  std::string timestamp;

  nlohmann::json ToJson() const;
};

/// Shared handle over a chat backend. Copies share the backend, transcript
/// and running totals; each handle carries its own budget counter.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions opts = {});

  /// Throws ProviderUnavailable, MockMiss or BudgetExceeded.
  CompletionResult Complete(const CompletionRequest& req);

  /// New handle counting subsequent calls against `limit_tokens`.
  Gateway WithBudget(std::int64_t limit_tokens) const;

  std::vector<TranscriptEntry> Transcript() const;
  /// Newline-delimited JSON, one exchange per line.
  std::string TranscriptNdjson() const;
  TokenCounts TotalTokens() const;
  std::size_t CallCount() const;
  std::int64_t BudgetUsed() const;

 private:
  struct Shared;
  struct Budget {
    std::mutex mu;
    std::optional<std::int64_t> limit;
    std::int64_t used = 0;
  };

  void WaitForDispatchSlot();

  std::shared_ptr<Shared> shared_;
  std::shared_ptr<Budget> budget_;
};

}  // namespace litrev::llm
