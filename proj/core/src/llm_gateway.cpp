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

#include "litrev/llm_gateway.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "litrev/error.hpp"
#include "litrev/text.hpp"

namespace litrev::llm {

using nlohmann::json;

void CompletionRequest::Validate() const {
  if (text::Trim(user_text).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "completion request has empty user text");
  }
  if (max_output_tokens < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_output_tokens must be >= 1");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must lie in [0, 2]");
  }
}

// ---------------------------------------------------------------------------
// Mocks

MockScript MockScript::FromJson(const json& j) {
  MockScript script;
  script.strict = j.value("strict", false);
  for (const auto& e : j.at("entries")) {
    MockEntry entry;
    if (e.contains("ordinal")) entry.ordinal = e.at("ordinal").get<int>();
    if (e.contains("match")) entry.substring = e.at("match").get<std::string>();
    if (entry.ordinal.has_value() == entry.substring.has_value()) {
      throw Error(ErrorCode::kInvalidArgument, "mock entry needs exactly one of 'match' or 'ordinal'");
    }
    entry.response = e.at("response").get<std::string>();
    script.entries.push_back(std::move(entry));
  }
  return script;
}

MockScript MockScript::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read mock script " + path.string());
  try {
    return FromJson(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "bad mock script " + path.string() + ": " + e.what());
  }
}

ScriptedBackend::ScriptedBackend(MockScript script) : script_(std::move(script)) {}

int ScriptedBackend::requests_seen() const {
  std::lock_guard lock(mu_);
  return seen_;
}

BackendReply ScriptedBackend::Send(const CompletionRequest& req) {
  std::lock_guard lock(mu_);
  const int ordinal = ++seen_;
  const std::string haystack = req.system_text + "\n" + req.user_text;
  const MockEntry* hit = nullptr;
  int hits = 0;
  for (const auto& e : script_.entries) {
    bool match = e.ordinal ? *e.ordinal == ordinal
                           : haystack.find(*e.substring) != std::string::npos;
    if (!match) continue;
    if (!hit) hit = &e;
    ++hits;
  }
  if (script_.strict && hits != 1) {
    throw Error(ErrorCode::kMockMiss, "strict mock: request " + std::to_string(ordinal) + " matched " +
                                          std::to_string(hits) + " entries");
  }
  return BackendReply{200, hit ? hit->response : std::string(), {}};
}

BackendReply CallbackBackend::Send(const CompletionRequest& req) {
  std::lock_guard lock(mu_);
  return BackendReply{200, fn_(req, ++seen_), {}};
}

// ---------------------------------------------------------------------------
// Provider config

ProviderConfig ProviderConfig::FromJson(const json& j) {
  ProviderConfig c;
  c.endpoint = j.value("endpoint", "");
  c.path = j.value("path", c.path);
  c.api_key = j.value("api_key", "");
  c.model_id = j.value("model", "");
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  return c;
}

void ProviderConfig::ApplyEnvironment() {
  if (const char* v = std::getenv("LITREV_LLM_ENDPOINT")) endpoint = v;
  if (const char* v = std::getenv("LITREV_LLM_API_KEY")) api_key = v;
  if (const char* v = std::getenv("LITREV_LLM_MODEL")) model_id = v;
}

// ---------------------------------------------------------------------------
// Gateway

json TranscriptEntry::ToJson() const {
  return json{{"request", request},
              {"response", response},
              {"tokens", {{"input", tokens.input}, {"output", tokens.output}}},
              {"timestamp", timestamp}};
}

struct Gateway::Shared {
  std::shared_ptr<ChatBackend> backend;
  GatewayOptions opts;

  std::mutex transcript_mu;
  std::vector<TranscriptEntry> transcript;
  TokenCounts totals;
  std::ofstream transcript_file;

  std::mutex dispatch_mu;
  std::chrono::steady_clock::time_point next_slot{};
};

namespace {

std::string UtcNow() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool Retryable(const BackendReply& r) {
  return r.status == 0 || r.status == 429 || r.status >= 500;
}

}  // namespace

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions opts)
    : shared_(std::make_shared<Shared>()), budget_(std::make_shared<Budget>()) {
  if (!backend) throw Error(ErrorCode::kInvalidArgument, "gateway needs a backend");
  if (!opts.clock) opts.clock = UtcNow;
  if (!opts.sleep) opts.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (opts.retry.max_attempts < 1) opts.retry.max_attempts = 1;
  budget_->limit = opts.token_budget;
  if (opts.transcript_path) {
    if (opts.transcript_path->has_parent_path()) {
      std::filesystem::create_directories(opts.transcript_path->parent_path());
    }
    shared_->transcript_file.open(*opts.transcript_path, std::ios::app);
    if (!shared_->transcript_file) {
      throw Error(ErrorCode::kIo, "cannot open transcript " + opts.transcript_path->string());
    }
  }
  shared_->backend = std::move(backend);
  shared_->opts = std::move(opts);
}

Gateway Gateway::WithBudget(std::int64_t limit_tokens) const {
  if (limit_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "budget must be positive");
  Gateway g = *this;
  g.budget_ = std::make_shared<Budget>();
  g.budget_->limit = limit_tokens;
  return g;
}

void Gateway::WaitForDispatchSlot() {
  const auto interval = shared_->opts.min_dispatch_interval;
  if (interval.count() <= 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(shared_->dispatch_mu);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, shared_->next_slot);
    shared_->next_slot = slot + interval;
  }
  auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(slot - std::chrono::steady_clock::now());
  if (wait.count() > 0) shared_->opts.sleep(wait);
}

CompletionResult Gateway::Complete(const CompletionRequest& in) {
  in.Validate();
  CompletionRequest req = in;
  if (req.model_id.empty()) req.model_id = shared_->opts.default_model_id;

  {
    std::lock_guard lock(budget_->mu);
    if (budget_->limit && budget_->used >= *budget_->limit) {
      throw Error(ErrorCode::kBudgetExceeded, "token budget of " + std::to_string(*budget_->limit) +
                                                  " already spent");
    }
  }

  const auto& retry = shared_->opts.retry;
  const auto started = std::chrono::steady_clock::now();
  BackendReply reply;
  int attempt = 0;
  auto delay = retry.base_delay;
  while (true) {
    ++attempt;
    WaitForDispatchSlot();
    reply = shared_->backend->Send(req);
    if (reply.status >= 200 && reply.status < 300) break;
    if (!Retryable(reply) || attempt >= retry.max_attempts) {
      throw Error(ErrorCode::kProviderUnavailable,
                  "provider failed after " + std::to_string(attempt) + " attempt(s): status " +
                      std::to_string(reply.status) + (reply.error.empty() ? "" : " " + reply.error));
    }
    shared_->opts.sleep(delay);
    delay = std::chrono::milliseconds(static_cast<std::int64_t>(delay.count() * retry.factor));
  }

  CompletionResult result;
  result.text = reply.text;
  result.attempt = attempt;
  result.tokens.input = text::ApproxTokens(req.system_text) + text::ApproxTokens(req.user_text);
  result.tokens.output = text::ApproxTokens(reply.text);
  result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - started)
                          .count();

  TranscriptEntry entry;
  entry.request = json{{"system", req.system_text},
                       {"user", req.user_text},
                       {"model", req.model_id},
                       {"max_output_tokens", req.max_output_tokens},
                       {"temperature", req.temperature}};
  entry.request["seed"] = req.seed ? json(*req.seed) : json(nullptr);
  entry.response = json{{"text", result.text}, {"attempt", attempt}};
  entry.tokens = result.tokens;
  {
    std::lock_guard lock(shared_->transcript_mu);
    entry.timestamp = shared_->opts.clock();
    shared_->totals.input += result.tokens.input;
    shared_->totals.output += result.tokens.output;
    if (shared_->transcript_file.is_open()) {
      shared_->transcript_file << entry.ToJson().dump() << '\n';
      shared_->transcript_file.flush();
    }
    shared_->transcript.push_back(std::move(entry));
  }

  std::lock_guard lock(budget_->mu);
  budget_->used += result.tokens.total();
  if (budget_->limit && budget_->used > *budget_->limit) {
    throw Error(ErrorCode::kBudgetExceeded, "token budget exceeded: used " + std::to_string(budget_->used) +
                                                " of " + std::to_string(*budget_->limit));
  }
  return result;
}

std::vector<TranscriptEntry> Gateway::Transcript() const {
  std::lock_guard lock(shared_->transcript_mu);
  return shared_->transcript;
}

std::string Gateway::TranscriptNdjson() const {
  std::string out;
  for (const auto& e : Transcript()) out += e.ToJson().dump() + "\n";
  return out;
}

TokenCounts Gateway::TotalTokens() const {
  std::lock_guard lock(shared_->transcript_mu);
  return shared_->totals;
}

std::size_t Gateway::CallCount() const {
  std::lock_guard lock(shared_->transcript_mu);
  return shared_->transcript.size();
}

std::int64_t Gateway::BudgetUsed() const {
  std::lock_guard lock(budget_->mu);
  return budget_->used;
}

}  // namespace litrev::llm
