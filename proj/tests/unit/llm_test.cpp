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


#include <atomic>
#include <thread>

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include <httplib.h>

#include "litrev/error.hpp"
#include "litrev/llm_gateway.hpp"
#include "litrev/query_generation.hpp"
#include "litrev/synthetic_backend.hpp"
#include "litrev/text.hpp"
#include "test_support.hpp"

namespace litrev {
namespace {

using llm::CompletionRequest;
using llm::Gateway;
using llm::GatewayOptions;
using ::testing::HasSubstr;

GatewayOptions FastOptions() {
  GatewayOptions o;
  o.retry.base_delay = std::chrono::milliseconds(1);
  o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return o;
}

CompletionRequest Req(std::string user) {
  CompletionRequest r;
  r.user_text = std::move(user);
  return r;
}

// Replays a fixed sequence of HTTP statuses, then succeeds.
class FlakyBackend : public llm::ChatBackend {
 public:
  explicit FlakyBackend(std::vector<int> statuses) : statuses_(std::move(statuses)) {}
  llm::BackendReply Send(const CompletionRequest&) override {
    const auto i = calls_++;
    if (i < statuses_.size()) return {statuses_[i], "", "boom"};
    return {200, "ok", ""};
  }
  std::string Name() const override { return "flaky"; }
  std::size_t calls_ = 0;

 private:
  std::vector<int> statuses_;
};

TEST(CompletionRequest, Validates) {
  auto r = Req("hi");
  EXPECT_NO_THROW(r.Validate());
  r.max_output_tokens = 0;
  EXPECT_THROW(r.Validate(), Error);
  r = Req("hi");
  r.temperature = -1;
  EXPECT_THROW(r.Validate(), Error);
  EXPECT_THROW(Req("").Validate(), Error);
}

TEST(Gateway, RetriesTransientFailuresWithBackoff) {
  auto backend = std::make_shared<FlakyBackend>(std::vector<int>{429, 503});
  auto opts = FastOptions();
  std::vector<long> sleeps;
  opts.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
  opts.retry.base_delay = std::chrono::milliseconds(100);
  Gateway gw(backend, opts);
  const auto r = gw.Complete(Req("q"));
  EXPECT_EQ(r.text, "ok");
  EXPECT_EQ(r.attempt, 3);
  EXPECT_EQ(sleeps, (std::vector<long>{100, 200}));
}

TEST(Gateway, GivesUpAfterMaxAttemptsAndOnClientErrors) {
  auto opts = FastOptions();
  opts.sleep = [](std::chrono::milliseconds) {};
  opts.retry.max_attempts = 3;
  auto flaky = std::make_shared<FlakyBackend>(std::vector<int>{500, 500, 500, 500});
  Gateway gw(flaky, opts);
  try {
    gw.Complete(Req("q"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
  EXPECT_EQ(flaky->calls_, 3u);

  auto bad_request = std::make_shared<FlakyBackend>(std::vector<int>{400});
  Gateway gw2(bad_request, opts);
  EXPECT_THROW(gw2.Complete(Req("q")), Error);
  EXPECT_EQ(bad_request->calls_, 1u);
}

TEST(Gateway, BudgetIsPerHandle) {
  auto backend = std::make_shared<llm::CallbackBackend>(
      [](const CompletionRequest&, int) { return std::string("one two three four five six"); });
  Gateway gw(backend, FastOptions());
  auto limited = gw.WithBudget(20);
  limited.Complete(Req("a b c"));  // 4 in + 8 out
  EXPECT_EQ(limited.BudgetUsed(), 12);
  EXPECT_THROW(limited.Complete(Req("again")), Error);  // recorded, then over
  try {
    limited.Complete(Req("refused"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
  }
  EXPECT_NO_THROW(gw.Complete(Req("unlimited")));
  EXPECT_EQ(gw.CallCount(), 3u);  // the refused call never dispatched
}

TEST(Gateway, BudgetExceededOnTheCallThatCrossesTheLimit) {
  auto backend = std::make_shared<llm::CallbackBackend>(
      [](const CompletionRequest&, int) { return std::string(40, 'x') + " y z"; });
  Gateway gw(backend, FastOptions());
  auto limited = gw.WithBudget(5);
  EXPECT_THROW(limited.Complete(Req("a b c d e f g h")), Error);
  EXPECT_EQ(gw.CallCount(), 1u);
}

TEST(Gateway, TranscriptRecordsEveryExchange) {
  testing::TempDir dir;
  auto opts = FastOptions();
  opts.transcript_path = dir / "t.ndjson";
  opts.default_model_id = "m-1";
  auto backend = std::make_shared<llm::CallbackBackend>(
      [](const CompletionRequest& r, int n) { return r.user_text + "#" + std::to_string(n); });
  {
    Gateway gw(backend, opts);
    gw.Complete(Req("first"));
    gw.Complete(Req("second"));
    const auto t = gw.Transcript();
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[1].response["text"], "second#2");
    EXPECT_EQ(t[0].request["model"], "m-1");
    EXPECT_EQ(t[0].timestamp, "2026-01-01T00:00:00Z");
    EXPECT_EQ(gw.TotalTokens().total(), t[0].tokens.total() + t[1].tokens.total());
  }
  const auto lines = text::SplitLines(text::Trim(testing::Slurp(dir / "t.ndjson")));
  ASSERT_EQ(lines.size(), 2u);
  const auto j = nlohmann::json::parse(lines[0]);
  EXPECT_TRUE(j.contains("request"));
  EXPECT_TRUE(j.contains("response"));
  EXPECT_TRUE(j.contains("tokens"));
  EXPECT_TRUE(j.contains("timestamp"));
}

TEST(Gateway, DispatchSpacing) {
  auto opts = FastOptions();
  opts.min_dispatch_interval = std::chrono::milliseconds(20);
  auto backend = std::make_shared<llm::CallbackBackend>([](const CompletionRequest&, int) { return "x"; });
  Gateway gw(backend, opts);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) gw.Complete(Req("q"));
  EXPECT_GE(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(55));
}

TEST(ScriptedBackend, StrictAndLax) {
  auto script = llm::MockScript::FromJson(nlohmann::json::parse(R"({
    "strict": true,
    "entries": [{"match": "alpha", "response": "A"}, {"ordinal": 2, "response": "second"}]
  })"));
  auto backend = std::make_shared<llm::ScriptedBackend>(script);
  Gateway gw(backend, FastOptions());
  EXPECT_EQ(gw.Complete(Req("alpha")).text, "A");
  EXPECT_EQ(gw.Complete(Req("beta")).text, "second");
  try {
    gw.Complete(Req("gamma"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMockMiss);
  }
  script.strict = false;
  Gateway lax(std::make_shared<llm::ScriptedBackend>(script), FastOptions());
  EXPECT_EQ(lax.Complete(Req("nothing matches")).text, "");
  EXPECT_THROW(llm::MockScript::FromJson(nlohmann::json::parse(R"({"entries": [{"response": "x"}]})")), Error);
}

TEST(ProviderConfig, EnvironmentOverrides) {
  auto c = llm::ProviderConfig::FromJson({{"endpoint", "http://a"}, {"model", "m"}});
  EXPECT_EQ(c.model_id, "m");
  setenv("LITREV_LLM_MODEL", "override", 1);
  c.ApplyEnvironment();
  unsetenv("LITREV_LLM_MODEL");
  EXPECT_EQ(c.model_id, "override");
}

// Real HTTP round trips against a local OpenAI-compatible stub.
class HttpBackendTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits_;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      if (n <= fail_first_) {
        res.status = 429;
        res.set_content("slow down", "text/plain");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const auto reply = nlohmann::json{
          {"choices", {{{"message", {{"role", "assistant"}, {"content", "echo: " + body["messages"].back()["content"].get<std::string>()}}}}}}};
      res.set_content(malformed_ ? "not json" : reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  llm::ProviderConfig Config() {
    llm::ProviderConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_);
    c.api_key = "sk-test";
    c.model_id = "stub";
    c.timeout_seconds = 5;
    return c;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  int fail_first_ = 0;
  bool malformed_ = false;
  std::string last_body_;
  std::string last_auth_;
};

TEST_F(HttpBackendTest, RetriesRateLimitsThenSucceeds) {
  fail_first_ = 2;
  auto opts = FastOptions();
  opts.sleep = [](std::chrono::milliseconds) {};
  Gateway gw(std::make_shared<llm::HttpChatBackend>(Config()), opts);
  auto req = Req("hello");
  req.system_text = "sys";
  const auto r = gw.Complete(req);
  EXPECT_EQ(r.text, "echo: hello");
  EXPECT_EQ(r.attempt, 3);
  EXPECT_EQ(hits_.load(), 3);
  EXPECT_EQ(last_auth_, "Bearer sk-test");
  const auto body = nlohmann::json::parse(last_body_);
  EXPECT_EQ(body["model"], "stub");
  EXPECT_EQ(body["messages"][0]["role"], "system");
}

TEST_F(HttpBackendTest, MalformedBodyIsAProviderFault) {
  malformed_ = true;
  auto opts = FastOptions();
  opts.sleep = [](std::chrono::milliseconds) {};
  opts.retry.max_attempts = 2;
  Gateway gw(std::make_shared<llm::HttpChatBackend>(Config()), opts);
  EXPECT_THROW(gw.Complete(Req("x")), Error);
  EXPECT_EQ(hits_.load(), 2);
}

TEST(HttpBackend, UnreachableEndpoint) {
  llm::ProviderConfig c;
  c.endpoint = "http://127.0.0.1:1";
  c.timeout_seconds = 1;
  auto opts = FastOptions();
  opts.sleep = [](std::chrono::milliseconds) {};
  opts.retry.max_attempts = 2;
  Gateway gw(std::make_shared<llm::HttpChatBackend>(c), opts);
  try {
    gw.Complete(Req("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
}

// ---------------------------------------------------------------------------
// Query generation

TEST(KeywordParser, NumberedBulletedAndCommaForms) {
  auto q = ParseKeywordResponse("Queries:\n1. graph neural networks\n2) \"node classification\"\n- GNN survey.\n", 3);
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[0].terms, "graph neural networks");
  EXPECT_EQ(q[1].terms, "node classification");
  EXPECT_EQ(q[2].terms, "GNN survey");
  EXPECT_EQ(q[2].rank, 3);

  q = ParseKeywordResponse("speech recognition, streaming ASR; acoustic models", 3);
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[1].terms, "streaming ASR");

  q = ParseKeywordResponse("1. Deep learning\n2. deep learning\n3. transfer learning, domain shift", 3);
  ASSERT_EQ(q.size(), 2u);  // commas split only a single line
  EXPECT_EQ(q[1].terms, "transfer learning, domain shift");
  EXPECT_TRUE(ParseKeywordResponse("", 3).empty());
}

TEST(GenerateQueries, ReprompsOnceThenFails) {
  int calls = 0;
  auto backend = std::make_shared<llm::CallbackBackend>([&](const CompletionRequest& r, int n) {
    ++calls;
    if (n == 1) {
      EXPECT_THAT(r.user_text, HasSubstr("into 3 short keyword search queries"));
      return std::string("1. only one");
    }
    EXPECT_THAT(r.user_text, HasSubstr("exactly 3 lines"));
    return std::string("1. a\n2. b\n3. c\n4. d");
  });
  Gateway gw(backend, FastOptions());
  const auto q = GenerateQueries(gw, QueryAbstract{"An abstract.", {}, ""}, 3);
  EXPECT_EQ(calls, 2);
  ASSERT_EQ(q.size(), 3u);
  EXPECT_EQ(q[2].terms, "c");

  Gateway stubborn(std::make_shared<llm::CallbackBackend>([](const CompletionRequest&, int) { return "x"; }),
                   FastOptions());
  try {
    GenerateQueries(stubborn, QueryAbstract{"An abstract.", {}, ""}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnparseableResponse);
  }
  EXPECT_THROW(GenerateQueries(gw, QueryAbstract{"  ", {}, ""}, 3), Error);
}

TEST(SyntheticBackend, KeywordsAreDeterministic) {
  Gateway gw(std::make_shared<llm::SyntheticBackend>(), FastOptions());
  const QueryAbstract a{"Graph neural networks for molecular property prediction.", {}, ""};
  const auto q1 = GenerateQueries(gw, a, 3);
  const auto q2 = GenerateQueries(gw, a, 3);
  EXPECT_EQ(q1, q2);
  EXPECT_EQ(q1[0].terms, "graph neural");
}

}  // namespace
}  // namespace litrev
