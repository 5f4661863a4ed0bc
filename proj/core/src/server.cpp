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

#include "litrev/server.hpp"

#include <algorithm>
#include <mutex>

#include <httplib.h>

#include "litrev/text.hpp"

namespace litrev::service {

using nlohmann::json;

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kPlanMissing:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kMalformedPlan:
    case ErrorCode::kUnknownKeyInText:
    case ErrorCode::kNoQueryVector:
    case ErrorCode::kNoCitationsFound:
    case ErrorCode::kUnparseableResponse:
    case ErrorCode::kDimensionMismatch:
      return 422;
    case ErrorCode::kBudgetExceeded:
      return 429;
    case ErrorCode::kProviderUnavailable:
    case ErrorCode::kBackendUnavailable:
      return 502;
    default:
      return 500;
  }
}

json ErrorEnvelope(const Error& e) {
  return {{"api_version", kApiVersion},
          {"code", std::string(ErrorCodeName(e.code()))},
          {"stage", e.stage()},
          {"message", e.what()}};
}

struct ApiServer::Impl {
  Pipeline& pipeline;
  httplib::Server http;
  std::mutex idem_mu;
  std::map<std::string, ApiResponse> idempotent;

  explicit Impl(Pipeline& p) : pipeline(p) {}

  ApiResponse Dispatch(const ApiRequest& req);
  ApiResponse Retrieve(const json& body);
  ApiResponse Generate(const json& body);
  ApiResponse PlanDerive(const json& body);
  ApiResponse GetRun(const std::string& run_id);
};

namespace {

ApiResponse Ok(json body) {
  body["api_version"] = kApiVersion;
  return ApiResponse{200, std::move(body), {}};
}

[[noreturn]] void BadRequest(const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg, "request"); }

json ParseBody(const std::string& body) {
  try {
    auto j = json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) BadRequest("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    BadRequest(std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string RequireString(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) BadRequest(std::string("'") + key + "' must be a string");
  return body[key].get<std::string>();
}

QueryAbstract AbstractFrom(const json& body) {
  QueryAbstract q;
  q.text = RequireString(body, "abstract");
  if (text::Trim(q.text).empty()) BadRequest("'abstract' must not be empty");
  if (body.contains("publication_date") && body["publication_date"].is_string()) {
    q.publication_date = TryParseDate(body["publication_date"].get<std::string>());
    if (!q.publication_date) BadRequest("'publication_date' must be YYYY, YYYY-MM or YYYY-MM-DD");
  }
  q.source_id = body.value("source_id", "");
  return q;
}

json CandidateRow(int rank, const PaperRecord& p, const RankEvidence* ev) {
  json row = {{"rank", rank},
              {"paper_id", p.paper_id},
              {"title", p.title},
              {"abstract", p.abstract},
              {"publication_date", FormatDate(p.publication_date)},
              {"citation_count", p.citation_count ? json(*p.citation_count) : json()}};
  if (ev != nullptr) {
    row["score"] = ev->score;
    row["verified"] = ev->verified;
    row["excerpts"] = ev->excerpts;
    row["arguments_for"] = ev->arguments_for;
    row["arguments_against"] = ev->arguments_against;
    row["flags"] = ev->flags;
  }
  return row;
}

}  // namespace

ApiResponse ApiServer::Impl::Retrieve(const json& body) {
  const auto abstract = AbstractFrom(body);
  std::string sort_by = "relevance";
  if (body.contains("options")) {
    const auto& o = body["options"];
    if (!o.is_object()) BadRequest("'options' must be an object");
    sort_by = o.value("sort_by", sort_by);
    if (sort_by != "relevance" && sort_by != "citation_count" && sort_by != "year") {
      BadRequest("options.sort_by must be relevance, citation_count or year");
    }
  }
  auto out = pipeline.Retrieve(abstract);

  std::vector<const PaperRecord*> order;
  for (const auto& id : out.ranked.ordering) {
    if (const auto* p = out.pool.Find(id)) order.push_back(p);
  }
  bool degraded = false;
  if (sort_by == "citation_count") {
    // Only meaningful when every candidate carries a count.
    degraded = std::any_of(order.begin(), order.end(), [](const PaperRecord* p) { return !p->citation_count; });
    if (!degraded) {
      std::stable_sort(order.begin(), order.end(),
                       [](const PaperRecord* a, const PaperRecord* b) { return *a->citation_count > *b->citation_count; });
    }
  } else if (sort_by == "year") {
    std::stable_sort(order.begin(), order.end(), [](const PaperRecord* a, const PaperRecord* b) {
      return a->publication_date.year() > b->publication_date.year();
    });
  }

  json rows = json::array();
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto ev = out.ranked.evidence.find(order[i]->paper_id);
    rows.push_back(CandidateRow(static_cast<int>(i) + 1, *order[i],
                                ev == out.ranked.evidence.end() ? nullptr : &ev->second));
  }
  json queries = json::array();
  for (const auto& q : out.queries) queries.push_back(q.terms);
  return Ok({{"run_id", out.run_id},
             {"queries", queries},
             {"ranked", out.ranked},
             {"candidates", rows},
             {"sort_by", degraded ? "relevance" : sort_by},
             {"sort_degraded", degraded},
             {"pool_underflow", out.pool_report.underflow ? json(*out.pool_report.underflow) : json()}});
}

ApiResponse ApiServer::Impl::Generate(const json& body) {
  const auto abstract = AbstractFrom(body);
  if (!body.contains("paper_ids") || !body["paper_ids"].is_array() || body["paper_ids"].empty()) {
    BadRequest("'paper_ids' must be a non-empty array");
  }
  const auto ids = body["paper_ids"].get<std::vector<std::string>>();
  const auto strategy = [&] {
    try {
      return gen::ParseStrategy(body.value("strategy", "zero_shot"));
    } catch (const Error& e) {
      throw e.WithStage("request");
    }
  }();

  std::optional<std::string> run_id;
  std::vector<PaperRecord> available;
  if (body.contains("run_id") && body["run_id"].is_string()) {
    run_id = body["run_id"].get<std::string>();
    auto pool = pipeline.store().Read(*run_id, "pool");
    if (!pool) throw Error(ErrorCode::kNotFound, "run '" + *run_id + "' has no candidate pool", "request");
    available = pool->at("candidate_set").get<CandidateSet>().candidates;
  }
  if (body.contains("papers")) available = body["papers"].get<std::vector<PaperRecord>>();

  std::vector<PaperRecord> selected;
  for (const auto& id : ids) {
    auto it = std::find_if(available.begin(), available.end(), [&](const PaperRecord& p) { return p.paper_id == id; });
    if (it == available.end()) BadRequest("paper '" + id + "' is not in the run's pool or the supplied papers");
    selected.push_back(*it);
  }

  std::optional<gen::SentencePlan> plan;
  if (body.contains("plan") && !body["plan"].is_null()) {
    if (!body["plan"].is_string()) BadRequest("'plan' must be a plan string");
    try {
      plan = gen::ParsePlan(body["plan"].get<std::string>(), DenseKeys(static_cast<int>(selected.size())));
    } catch (const Error& e) {
      throw e.WithStage("generation");
    }
  }

  auto out = pipeline.Generate(abstract, selected, strategy, plan, run_id);
  json key_map = json::object();
  for (const auto& [k, id] : out.key_to_paper) key_map[k.ToString()] = id;
  json coverage = {{"covered", out.coverage.covered}};
  for (const auto& [name, keys] : {std::pair{"found", &out.coverage.found}, std::pair{"missing", &out.coverage.missing},
                                   std::pair{"spurious", &out.coverage.spurious}}) {
    auto arr = json::array();
    for (const auto& k : *keys) arr.push_back(k.ToString());
    coverage[name] = arr;
  }
  json adherence;
  if (out.adherence) {
    adherence = {{"planned_lines", out.adherence->planned_lines},
                 {"generated_lines", out.adherence->generated_lines},
                 {"diff", out.adherence->diff},
                 {"exact", out.adherence->exact()}};
  }
  return Ok({{"run_id", out.run_id},
             {"review", gen::ToJson(out.review)},
             {"plan", out.request.plan ? gen::ToJson(*out.request.plan) : json()},
             {"key_to_paper", key_map},
             {"coverage", coverage},
             {"adherence", adherence}});
}

ApiResponse ApiServer::Impl::PlanDerive(const json& body) {
  std::set<CitationKey> keys;
  if (body.contains("num_papers")) {
    if (!body["num_papers"].is_number_integer() || body["num_papers"].get<int>() < 1) {
      BadRequest("'num_papers' must be a positive integer");
    }
    keys = DenseKeys(body["num_papers"].get<int>());
  }
  try {
    if (body.contains("plan")) {
      const auto plan = gen::ParsePlan(RequireString(body, "plan"), keys);
      return Ok({{"plan", gen::ToJson(plan)}, {"rendered", gen::RenderPlan(plan)}});
    }
    if (body.contains("text")) {
      const auto derived = gen::DerivePlanFromGroundTruth(RequireString(body, "text"), keys);
      return Ok({{"plan", gen::ToJson(derived.plan)},
                 {"rendered", gen::RenderPlan(derived.plan)},
                 {"no_citations_found", derived.no_citations_found}});
    }
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.WithStage("plan");
  }
  if (keys.empty()) BadRequest("supply 'plan', 'text' or 'num_papers'");
  const auto plan = SuggestPlan(static_cast<int>(keys.size()));
  return Ok({{"plan", gen::ToJson(plan)}, {"rendered", gen::RenderPlan(plan)}});
}

ApiResponse ApiServer::Impl::GetRun(const std::string& run_id) {
  try {
    return Ok({{"run", pipeline.store().Load(run_id)}});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) throw Error(ErrorCode::kNotFound, e.what(), "runs");
    throw e.WithStage("runs");
  }
}

ApiResponse ApiServer::Impl::Dispatch(const ApiRequest& req) {
  const auto& path = req.path;
  const bool is_run = text::StartsWith(path, "/runs/") && path.size() > 6;
  const bool known = path == "/health" || path == "/retrieve" || path == "/generate" || path == "/plan/derive" || is_run;
  if (!known) throw Error(ErrorCode::kNotFound, "no route for " + path, "request");
  const bool get_route = path == "/health" || is_run;
  if ((get_route && req.method != "GET") || (!get_route && req.method != "POST")) {
    ApiResponse r{405, ErrorEnvelope(Error(ErrorCode::kInvalidArgument, req.method + " not allowed on " + path, "request")), {}};
    return r;
  }
  if (path == "/health") return Ok({{"status", "ok"}});
  if (is_run) return GetRun(path.substr(6));
  const auto body = ParseBody(req.body);
  if (path == "/retrieve") return Retrieve(body);
  if (path == "/plan/derive") return PlanDerive(body);

  auto key_it = req.headers.find("idempotency-key");
  if (key_it == req.headers.end() || key_it->second.empty()) return Generate(body);
  const auto key = key_it->second;
  {
    std::lock_guard lock(idem_mu);
    if (auto hit = idempotent.find(key); hit != idempotent.end()) {
      auto replay = hit->second;
      replay.headers["Idempotent-Replay"] = "true";
      return replay;
    }
  }
  auto resp = Generate(body);
  std::lock_guard lock(idem_mu);
  return idempotent.emplace(key, resp).first->second;
}

ApiServer::ApiServer(Pipeline& pipeline) : impl_(std::make_unique<Impl>(pipeline)) {
  auto bridge = [this](const httplib::Request& hreq, httplib::Response& hres) {
    ApiRequest req;
    req.method = hreq.method;
    req.path = hreq.path;
    req.body = hreq.body;
    for (const auto& [name, value] : hreq.headers) req.headers[text::ToLower(name)] = value;
    const auto resp = Handle(req);
    hres.status = resp.status;
    for (const auto& [name, value] : resp.headers) hres.set_header(name, value);
    hres.set_header("Access-Control-Allow-Origin", "*");
    hres.set_content(resp.body.dump(), "application/json");
  };
  auto& http = impl_->http;
  http.Get("/health", bridge);
  http.Get(R"(/runs/([^/]+))", bridge);
  http.Post("/retrieve", bridge);
  http.Post("/generate", bridge);
  http.Post("/plan/derive", bridge);
  http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.status = 204;
  });
}

ApiServer::~ApiServer() { Stop(); }

ApiResponse ApiServer::Handle(const ApiRequest& req) {
  try {
    return impl_->Dispatch(req);
  } catch (const Error& e) {
    return ApiResponse{HttpStatusFor(e.code()), ErrorEnvelope(e), {}};
  } catch (const nlohmann::json::exception& e) {
    return ApiResponse{400, ErrorEnvelope(Error(ErrorCode::kInvalidArgument, e.what(), "request")), {}};
  } catch (const std::exception& e) {
    return ApiResponse{500, ErrorEnvelope(Error(ErrorCode::kIo, e.what(), "internal")), {}};
  }
}

void ApiServer::ServeStatic(const std::filesystem::path& dir) {
  if (!impl_->http.set_mount_point("/", dir.string())) {
    throw Error(ErrorCode::kNotFound, "static directory " + dir.string() + " does not exist");
  }
}

int ApiServer::Bind(const std::string& host, int port) {
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

int ApiServer::BindToAnyPort(const std::string& host) { return impl_->http.bind_to_any_port(host); }

void ApiServer::ListenAfterBind() { impl_->http.listen_after_bind(); }

void ApiServer::Stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

bool ApiServer::IsRunning() const { return impl_->http.is_running(); }

}  // namespace litrev::service
