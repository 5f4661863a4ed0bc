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

#include "litrev/reranking.hpp"

#include <algorithm>
#include <charconv>
#include <future>
#include <limits>
#include <regex>
#include <semaphore>
#include <set>

#include "litrev/error.hpp"
#include "litrev/text.hpp"

namespace litrev::rerank {

using nlohmann::json;

std::string_view ToString(PermutationOutcome o) {
  switch (o) {
    case PermutationOutcome::kComplete: return "complete";
    case PermutationOutcome::kIncomplete: return "incomplete";
    case PermutationOutcome::kRepeated: return "repeated";
    case PermutationOutcome::kGarbage: return "garbage";
  }
  return "garbage";
}

namespace {

constexpr std::int64_t kOverflow = std::numeric_limits<std::int64_t>::max();

std::int64_t ToIndex(std::string_view digits) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || p != digits.data() + digits.size()) return kOverflow;
  return v;
}

bool IsDigit(char c) { return c >= '0' && c <= '9'; }

int Severity(PermutationOutcome o) {
  switch (o) {
    case PermutationOutcome::kComplete: return 0;
    case PermutationOutcome::kIncomplete: return 1;
    case PermutationOutcome::kGarbage: return 2;
    case PermutationOutcome::kRepeated: return 3;
  }
  return 0;
}

}  // namespace

PermutationParse ClassifyPermutation(std::string_view raw, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "permutation size must be >= 1");
  PermutationParse parse;
  parse.raw = std::string(raw);

  bool bad_token = false;
  bool any_bracket = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '[') continue;
    auto close = raw.find(']', i + 1);
    if (close == std::string_view::npos) break;
    any_bracket = true;
    auto inner = text::Trim(raw.substr(i + 1, close - i - 1));
    if (!inner.empty() && std::all_of(inner.begin(), inner.end(), IsDigit)) {
      parse.indices.push_back(ToIndex(inner));
    } else {
      bad_token = true;
    }
    i = close;
  }
  if (!any_bracket) {
    for (std::size_t i = 0; i < raw.size();) {
      if (!IsDigit(raw[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < raw.size() && IsDigit(raw[j])) ++j;
      parse.indices.push_back(ToIndex(raw.substr(i, j - i)));
      i = j;
    }
  }

  std::set<std::int64_t> seen;
  bool repeated = false;
  bool out_of_range = false;
  std::size_t in_range = 0;
  for (auto idx : parse.indices) {
    if (!seen.insert(idx).second) repeated = true;
    if (idx < 1 || idx > n) {
      out_of_range = true;
    } else {
      ++in_range;
    }
  }
  if (repeated) {
    parse.outcome = PermutationOutcome::kRepeated;
  } else if (out_of_range || bad_token || parse.indices.empty()) {
    parse.outcome = PermutationOutcome::kGarbage;
  } else if (in_range < static_cast<std::size_t>(n)) {
    parse.outcome = PermutationOutcome::kIncomplete;
  } else {
    parse.outcome = PermutationOutcome::kComplete;
  }
  return parse;
}

std::vector<int> RepairPermutation(const PermutationParse& parse, int n) {
  std::vector<int> order;
  std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
  for (auto idx : parse.indices) {
    if (idx < 1 || idx > n || used[static_cast<std::size_t>(idx)]) continue;
    used[static_cast<std::size_t>(idx)] = true;
    order.push_back(static_cast<int>(idx));
  }
  for (int i = 1; i <= n; ++i) {
    if (!used[static_cast<std::size_t>(i)]) order.push_back(i);
  }
  return order;
}

PermutationOutcome PermutationResult::WorstOutcome() const {
  auto worst = PermutationOutcome::kComplete;
  for (const auto& p : parses) {
    if (Severity(p.outcome) > Severity(worst)) worst = p.outcome;
  }
  return worst;
}

std::string PermutationConfig::DefaultPrompt() {
  return "I will provide you with {num} candidate papers, each indicated by a numerical identifier []. Rank the "
         "candidates by how relevant they are for the related work section of the paper with the following "
         "abstract.\n\n"
         "Query abstract:\n{abstract}\n\n"
         "{candidates}\n"
         "Rank the {num} candidates above by relevance to the query abstract. All candidates must be included and "
         "listed using their identifiers in descending order of relevance. The output format must be [] > [], for "
         "example [2] > [1]. Only respond with the ranking, do not explain.\n";
}

std::string RenderCandidateBlock(const std::vector<const PaperRecord*>& papers) {
  std::string out;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    out += "[" + std::to_string(i + 1) + "] Title: " + papers[i]->title + "\nAbstract: " +
           text::CollapseWhitespace(papers[i]->abstract) + "\n\n";
  }
  return out;
}

namespace {

std::vector<int> RankSlice(llm::Gateway& gateway, const std::vector<const PaperRecord*>& slice,
                           const QueryAbstract& query, const PermutationConfig& cfg,
                           std::vector<PermutationParse>* parses) {
  llm::CompletionRequest req;
  req.system_text = cfg.system_text;
  req.max_output_tokens = cfg.max_output_tokens;
  req.user_text = cfg.prompt.Render({{"num", std::to_string(slice.size())},
                                     {"abstract", query.text},
                                     {"candidates", RenderCandidateBlock(slice)}});
  auto reply = gateway.Complete(req);
  const int n = static_cast<int>(slice.size());
  auto parse = ClassifyPermutation(reply.text, n);
  auto order = RepairPermutation(parse, n);
  parses->push_back(std::move(parse));
  return order;
}

}  // namespace

PermutationResult RerankPermutation(llm::Gateway& gateway, const CandidateSet& pool, const QueryAbstract& query,
                                    const PermutationConfig& cfg) {
  if (pool.candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot rerank an empty pool");
  if (cfg.window_size < 2 || cfg.stride < 1 || cfg.stride >= cfg.window_size) {
    throw Error(ErrorCode::kInvalidArgument, "window_size must exceed stride, both positive");
  }

  std::vector<const PaperRecord*> current;
  for (const auto& p : pool.candidates) current.push_back(&p);
  const auto n = current.size();

  PermutationResult result;
  auto full_prompt = cfg.prompt.Render({{"num", std::to_string(n)},
                                        {"abstract", query.text},
                                        {"candidates", RenderCandidateBlock(current)}});
  const bool fits = text::ApproxTokens(cfg.system_text) + text::ApproxTokens(full_prompt) <= cfg.max_prompt_tokens;

  auto apply = [&](std::size_t start, std::size_t end) {
    std::vector<const PaperRecord*> slice(current.begin() + static_cast<std::ptrdiff_t>(start),
                                          current.begin() + static_cast<std::ptrdiff_t>(end));
    auto order = RankSlice(gateway, slice, query, cfg, &result.parses);
    for (std::size_t i = 0; i < order.size(); ++i) current[start + i] = slice[static_cast<std::size_t>(order[i] - 1)];
  };

  if (fits || n <= static_cast<std::size_t>(cfg.window_size)) {
    apply(0, n);
  } else {
    // Back-to-front sliding window: strong candidates bubble towards the head.
    const auto window = static_cast<std::size_t>(cfg.window_size);
    const auto stride = static_cast<std::size_t>(cfg.stride);
    std::size_t end = n;
    while (true) {
      std::size_t start = end > window ? end - window : 0;
      apply(start, end);
      if (start == 0) break;
      end = end > stride ? end - stride : 0;
    }
  }

  result.ranked.query_id = query.source_id;
  result.ranked.strategy = RankStrategy::kPermutation;
  for (std::size_t rank = 1; rank <= n; ++rank) {
    const auto& id = current[rank - 1]->paper_id;
    result.ranked.ordering.push_back(id);
    RankEvidence ev;
    ev.score = static_cast<double>(n - rank + 1) / static_cast<double>(n);
    ev.verified = true;
    ev.attempts = 1;
    result.ranked.evidence[id] = std::move(ev);
  }
  if (result.WorstOutcome() != PermutationOutcome::kComplete) {
    const std::string flag = "repaired:" + std::string(ToString(result.WorstOutcome()));
    for (auto& [id, ev] : result.ranked.evidence) ev.flags.push_back(flag);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Debate

std::string_view ToString(UnverifiedPolicy p) {
  return p == UnverifiedPolicy::kDemoteToTail ? "demote_to_tail" : "keep_with_flag";
}

UnverifiedPolicy ParseUnverifiedPolicy(std::string_view s) {
  if (s == "demote_to_tail") return UnverifiedPolicy::kDemoteToTail;
  if (s == "keep_with_flag") return UnverifiedPolicy::kKeepWithFlag;
  throw Error(ErrorCode::kInvalidArgument, "unknown unverified policy '" + std::string(s) + "'");
}

void DebateConfig::Validate() const {
  if (max_attribution_retries < 0 || max_attribution_retries > 5) {
    throw Error(ErrorCode::kInvalidArgument, "max_attribution_retries must lie in [0, 5]");
  }
  if (parallelism < 1) throw Error(ErrorCode::kInvalidArgument, "debate parallelism must be >= 1");
}

std::string DebateConfig::DefaultPrompt() {
  return "You are given the abstract of a paper being written (the query paper) and the abstract of a candidate "
         "paper. Decide whether the candidate paper should be cited in the related work section of the query "
         "paper.\n\n"
         "Query abstract:\n{query}\n\n"
         "Candidate title: {title}\n"
         "Candidate abstract:\n{candidate}\n\n"
         "First, give arguments for including the candidate paper. Then give arguments against including it. "
         "Support the arguments with sentences copied verbatim from the candidate abstract. Finally, based on the "
         "arguments, give the probability that the candidate paper should be included.\n\n"
         "End your answer with a block in exactly this format:\n"
         "```verdict\n"
         "{\"arguments_for\": [\"...\"], \"arguments_against\": [\"...\"], "
         "\"excerpts\": [\"sentence copied verbatim from the candidate abstract\"], \"probability\": 0.5}\n"
         "```\n";
}

std::string DebateConfig::DefaultReprompt() {
  return "{feedback}\n\n"
         "Query abstract:\n{query}\n\n"
         "Candidate title: {title}\n"
         "Candidate abstract:\n{candidate}\n\n"
         "Answer again. Give arguments for and against including the candidate paper, support them with sentences "
         "copied exactly as they appear in the candidate abstract, and end with the verdict block:\n"
         "```verdict\n"
         "{\"arguments_for\": [\"...\"], \"arguments_against\": [\"...\"], "
         "\"excerpts\": [\"sentence copied verbatim from the candidate abstract\"], \"probability\": 0.5}\n"
         "```\n";
}

namespace {

std::vector<std::string> StringList(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& v = j[key];
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (x.is_string()) out.push_back(x.get<std::string>());
    }
  }
  return out;
}

std::optional<double> Probability(const json& v) {
  double p;
  if (v.is_number()) {
    p = v.get<double>();
  } else if (v.is_string()) {
    auto s = std::string(text::Trim(v.get<std::string>()));
    bool percent = !s.empty() && s.back() == '%';
    if (percent) s.pop_back();
    try {
      std::size_t used = 0;
      p = std::stod(s, &used);
      if (used != s.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (percent) p /= 100.0;
  } else {
    return std::nullopt;
  }
  if (p > 1.0 && p <= 100.0) p /= 100.0;
  if (!(p >= 0.0 && p <= 1.0)) return std::nullopt;
  return p;
}

std::optional<DebateVerdict> FromObject(const json& j) {
  if (!j.is_object() || !j.contains("probability")) return std::nullopt;
  auto p = Probability(j["probability"]);
  if (!p) return std::nullopt;
  DebateVerdict v;
  v.probability = *p;
  v.arguments_for = StringList(j, "arguments_for");
  v.arguments_against = StringList(j, "arguments_against");
  v.excerpts = StringList(j, "excerpts");
  return v;
}

std::optional<DebateVerdict> FromTextObject(std::string_view s) {
  auto j = json::parse(s, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return FromObject(j);
}

}  // namespace

std::optional<DebateVerdict> ParseDebateVerdict(std::string_view raw) {
  // Fenced blocks, last first.
  std::vector<std::string_view> blocks;
  for (std::size_t pos = 0;;) {
    auto open = raw.find("```", pos);
    if (open == std::string_view::npos) break;
    auto body = raw.find('\n', open);
    if (body == std::string_view::npos) break;
    auto close = raw.find("```", body);
    if (close == std::string_view::npos) break;
    blocks.push_back(raw.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    if (auto v = FromTextObject(*it)) return v;
  }

  auto last_close = raw.rfind('}');
  if (last_close != std::string_view::npos) {
    for (std::size_t open = raw.find('{'); open != std::string_view::npos && open < last_close;
         open = raw.find('{', open + 1)) {
      if (auto v = FromTextObject(raw.substr(open, last_close - open + 1))) return v;
    }
  }

  static const std::regex kPhrase(R"([Pp]robability[^0-9]{0,24}?([0-9]*\.?[0-9]+)\s*(%?))");
  std::string s(raw);
  std::smatch m;
  std::optional<DebateVerdict> found;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kPhrase); it != std::sregex_iterator(); ++it) {
    auto p = Probability(json((*it)[1].str() + (*it)[2].str()));
    if (p) {
      found = DebateVerdict{};
      found->probability = *p;
    }
  }
  return found;
}

std::string NormalizeExcerpt(std::string_view s) {
  static constexpr std::string_view kQuotes[] = {"\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                 "\xE2\x80\x98", "\xE2\x80\x99"};
  std::string out = text::CollapseWhitespace(s);
  bool changed = true;
  while (changed && !out.empty()) {
    changed = false;
    for (auto q : kQuotes) {
      if (out.size() >= q.size() && std::string_view(out).substr(0, q.size()) == q) {
        out.erase(0, q.size());
        changed = true;
      }
      if (out.size() >= q.size() && std::string_view(out).substr(out.size() - q.size()) == q) {
        out.erase(out.size() - q.size());
        changed = true;
      }
    }
    out = std::string(text::Trim(out));
  }
  return out;
}

bool VerifyAttribution(const std::vector<std::string>& excerpts, std::string_view source_abstract) {
  const auto source = text::CollapseWhitespace(source_abstract);
  return std::all_of(excerpts.begin(), excerpts.end(), [&](const std::string& e) {
    return source.find(NormalizeExcerpt(e)) != std::string::npos;
  });
}

RankEvidence DebateRankOne(llm::Gateway& gateway, const PaperRecord& candidate, const QueryAbstract& query,
                           const DebateConfig& cfg) {
  cfg.Validate();
  if (text::Trim(candidate.abstract).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "candidate '" + candidate.paper_id + "' has no abstract");
  }
  std::map<std::string, std::string> vars{
      {"query", query.text}, {"title", candidate.title}, {"candidate", candidate.abstract}};
  llm::CompletionRequest req;
  req.system_text = cfg.system_text;
  req.max_output_tokens = cfg.max_output_tokens;

  RankEvidence ev;
  std::optional<DebateVerdict> last;
  std::string feedback;
  const int max_attempts = 1 + (cfg.verify_attribution ? cfg.max_attribution_retries : 0);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt == 1) {
      req.user_text = cfg.prompt.Render(vars);
    } else {
      vars["feedback"] = feedback;
      req.user_text = cfg.reprompt.Render(vars);
    }
    ev.attempts = attempt;
    auto verdict = ParseDebateVerdict(gateway.Complete(req).text);
    if (!verdict) {
      feedback = "Your previous answer did not end with a readable verdict block containing a probability.";
      continue;
    }
    std::erase_if(verdict->excerpts, [](const std::string& e) { return NormalizeExcerpt(e).empty(); });
    last = verdict;
    if (!cfg.verify_attribution) break;

    std::vector<std::string> missing;
    for (const auto& e : verdict->excerpts) {
      if (!VerifyAttribution({e}, candidate.abstract)) missing.push_back(e);
    }
    if (!verdict->excerpts.empty() && missing.empty()) {
      ev.verified = true;
      break;
    }
    if (verdict->excerpts.empty()) {
      feedback = "Your previous answer did not quote any sentence from the candidate abstract.";
    } else {
      feedback = "These excerpts from your previous answer do not appear verbatim in the candidate abstract:\n";
      for (const auto& m : missing) feedback += "- " + m + "\n";
      feedback += "Copy sentences exactly as they appear in the candidate abstract.";
    }
  }

  if (!last) {
    ev.score = 0.0;
    ev.verified = false;
    ev.flags.push_back("unparseable_verdict");
    return ev;
  }
  ev.score = last->probability;
  ev.arguments_for = last->arguments_for;
  ev.arguments_against = last->arguments_against;
  if (!cfg.verify_attribution) {
    ev.excerpts = last->excerpts;
    ev.flags.push_back("verification_disabled");
    return ev;
  }
  std::size_t rejected = 0;
  for (const auto& e : last->excerpts) {
    if (VerifyAttribution({e}, candidate.abstract)) {
      ev.excerpts.push_back(e);
    } else {
      ++rejected;
    }
  }
  if (!ev.verified) ev.flags.push_back("unverified");
  if (rejected) ev.flags.push_back("rejected_excerpts:" + std::to_string(rejected));
  return ev;
}

std::vector<std::string> OrderByEvidence(const std::map<std::string, RankEvidence>& evidence,
                                         UnverifiedPolicy policy) {
  std::vector<std::string> ids;
  for (const auto& [id, ev] : evidence) ids.push_back(id);
  std::sort(ids.begin(), ids.end(), [&](const std::string& a, const std::string& b) {
    const auto& ea = evidence.at(a);
    const auto& eb = evidence.at(b);
    if (policy == UnverifiedPolicy::kDemoteToTail && ea.verified != eb.verified) return ea.verified;
    if (ea.score != eb.score) return ea.score > eb.score;
    return a < b;
  });
  return ids;
}

RankedList RerankDebate(llm::Gateway& gateway, const CandidateSet& pool, const QueryAbstract& query,
                        const DebateConfig& cfg) {
  cfg.Validate();
  if (pool.candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot rerank an empty pool");

  std::vector<RankEvidence> results(pool.candidates.size());
  auto run_one = [&](std::size_t i) {
    const auto& c = pool.candidates[i];
    try {
      results[i] = DebateRankOne(gateway, c, query, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProviderUnavailable && e.code() != ErrorCode::kInvalidArgument) throw;
      RankEvidence ev;
      ev.flags.push_back(e.code() == ErrorCode::kProviderUnavailable ? "provider_unavailable" : "no_abstract");
      results[i] = std::move(ev);
    }
  };

  if (cfg.parallelism <= 1) {
    for (std::size_t i = 0; i < results.size(); ++i) run_one(i);
  } else {
    std::counting_semaphore<> slots(cfg.parallelism);
    std::vector<std::future<void>> pending;
    for (std::size_t i = 0; i < results.size(); ++i) {
      slots.acquire();
      pending.push_back(std::async(std::launch::async, [&, i] {
        struct Release {
          std::counting_semaphore<>& s;
          ~Release() { s.release(); }
        } release{slots};
        run_one(i);
      }));
    }
    for (auto& f : pending) f.get();
  }

  RankedList out;
  out.query_id = query.source_id;
  out.strategy = RankStrategy::kDebate;
  for (std::size_t i = 0; i < results.size(); ++i) out.evidence[pool.candidates[i].paper_id] = std::move(results[i]);
  out.ordering = OrderByEvidence(out.evidence, cfg.unverified_policy);
  return out;
}

}  // namespace litrev::rerank
