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

#include "litrev/generation.hpp"

#include <future>
#include <regex>
#include <semaphore>

#include "litrev/error.hpp"
#include "litrev/text.hpp"

namespace litrev::gen {

namespace {

[[noreturn]] void Malformed(const std::string& msg) { throw Error(ErrorCode::kMalformedPlan, msg); }

int ParseCount(const std::string& digits, const char* what) {
  if (digits.size() > 7) Malformed(std::string(what) + " is out of range: " + digits);
  return std::stoi(digits);
}

std::string JoinLines(const std::set<int>& lines) {
  std::vector<std::string> parts;
  for (int l : lines) parts.push_back(std::to_string(l));
  if (parts.size() == 1) return parts[0];
  std::string out;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (i > 0) out += ", ";
    out += parts[i];
  }
  return out + " and " + parts.back();
}

std::vector<std::string> Digits(const std::string& s) {
  static const std::regex kNum(R"(\d+)");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kNum); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

}  // namespace

std::map<CitationKey, std::set<int>> SentencePlan::LinesByKey() const {
  std::map<CitationKey, std::set<int>> out;
  for (const auto& [line, keys] : assignments) {
    for (const auto& k : keys) out[k].insert(line);
  }
  return out;
}

std::set<CitationKey> SentencePlan::Keys() const {
  std::set<CitationKey> out;
  for (const auto& [line, keys] : assignments) out.insert(keys.begin(), keys.end());
  return out;
}

void SentencePlan::Validate(const std::set<CitationKey>& keys) const {
  if (num_sentences < 1) Malformed("num_sentences must be at least 1");
  if (num_words < 1) Malformed("num_words must be at least 1");
  for (const auto& [line, line_keys] : assignments) {
    if (line < 1 || line > num_sentences) {
      Malformed("line " + std::to_string(line) + " is outside 1.." + std::to_string(num_sentences));
    }
    if (line_keys.empty()) Malformed("line " + std::to_string(line) + " has an empty key set");
    if (keys.empty()) continue;
    for (const auto& k : line_keys) {
      if (!keys.count(k)) Malformed("plan cites unknown key " + k.ToString());
    }
  }
  if (keys.empty()) return;
  const auto cited = Keys();
  for (const auto& k : keys) {
    if (!cited.count(k)) Malformed("key " + k.ToString() + " is never cited by the plan");
  }
}

std::string RenderPlan(const SentencePlan& plan) {
  std::string out = "Please generate " + std::to_string(plan.num_sentences) + " sentences in " +
                    std::to_string(plan.num_words) + " words.";
  for (const auto& [key, lines] : plan.LinesByKey()) {
    out += " Cite " + key.ToString() + " at line " + JoinLines(lines) + ".";
  }
  return out;
}

SentencePlan ParsePlan(std::string_view s_in, const std::set<CitationKey>& keys) {
  static const std::regex kHeader(R"(^\s*please\s+generate\s+(\d+)\s+sentences?\s+in\s+(\d+)\s+words?\s*(\.|$))",
                                  std::regex::icase);
  static const std::regex kClause(
      R"(^\s*cite\s+(@cite_\d+(?:\s*(?:,\s*and|,|and)\s*@cite_\d+)*)\s+at\s+lines?\s+)"
      R"((\d+(?:\s*(?:,\s*and|,|and)\s*\d+)*)\s*(\.|$))",
      std::regex::icase);

  const std::string s(s_in);
  std::smatch m;
  if (!std::regex_search(s, m, kHeader)) Malformed("plan must start with 'Please generate S sentences in W words.'");
  SentencePlan plan;
  plan.num_sentences = ParseCount(m[1].str(), "sentence count");
  plan.num_words = ParseCount(m[2].str(), "word count");

  std::string rest = m.suffix().str();
  while (!text::Trim(rest).empty()) {
    std::smatch c;
    if (!std::regex_search(rest, c, kClause)) Malformed("unrecognized plan text: '" + std::string(text::Trim(rest)) + "'");
    const auto clause_keys = ExtractCitationKeys(c[1].str());
    for (const auto& line_digits : Digits(c[2].str())) {
      const int line = ParseCount(line_digits, "line");
      plan.assignments[line].insert(clause_keys.begin(), clause_keys.end());
    }
    rest = c.suffix().str();
  }
  plan.Validate(keys);
  return plan;
}

DerivedPlan DerivePlanFromGroundTruth(std::string_view ground_truth, const std::set<CitationKey>& keys,
                                      const SentenceSplitter& splitter) {
  const auto sentences = splitter(ground_truth);
  if (sentences.empty()) throw Error(ErrorCode::kInvalidArgument, "ground truth text is empty");
  DerivedPlan out;
  out.plan.num_sentences = static_cast<int>(sentences.size());
  const auto words = static_cast<int>(text::WordCount(ground_truth));
  out.plan.num_words = std::max(10, (words + 5) / 10 * 10);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (const auto& k : ExtractCitationKeys(sentences[i])) {
      if (!keys.empty() && !keys.count(k)) continue;
      out.plan.assignments[static_cast<int>(i) + 1].insert(k);
    }
  }
  out.no_citations_found = out.plan.assignments.empty();
  return out;
}

std::string_view ToString(Strategy s) {
  switch (s) {
    case Strategy::kZeroShot:
      return "zero_shot";
    case Strategy::kPlanGiven:
      return "plan_given";
    case Strategy::kPlanLearned:
      return "plan_learned";
    case Strategy::kPerCite:
      return "per_cite";
    case Strategy::kSentenceBySentence:
      return "sentence_by_sentence";
  }
  return "zero_shot";
}

Strategy ParseStrategy(std::string_view s) {
  for (auto st : {Strategy::kZeroShot, Strategy::kPlanGiven, Strategy::kPlanLearned, Strategy::kPerCite,
                  Strategy::kSentenceBySentence}) {
    if (ToString(st) == s) return st;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown generation strategy: " + std::string(s));
}

std::set<CitationKey> GenerationRequest::Keys() const {
  std::set<CitationKey> out;
  for (const auto& [k, _] : references) out.insert(k);
  return out;
}

void GenerationRequest::Validate() const {
  if (text::Trim(query_abstract).empty()) throw Error(ErrorCode::kInvalidArgument, "query abstract is empty");
  const bool needs_plan = strategy == Strategy::kPlanGiven || strategy == Strategy::kSentenceBySentence;
  if (needs_plan && !plan) {
    throw Error(ErrorCode::kPlanMissing, std::string(ToString(strategy)) + " requires a sentence plan");
  }
  if (plan) plan->Validate(Keys());
}

std::string GenerationTemplates::DefaultZeroShot() {
  return R"(You will be given the abstract of a scientific paper and the abstracts of its reference papers, each in triple quotes. Write the related work section of the paper using only this material. Build one cohesive story: compare the strengths and weaknesses of the prior work and use them to motivate the proposed approach. Refer to a reference paper only through its citation key, for example @cite_1. Do not cite the main abstract, do not use bullet points and do not add a reference list at the end.

Main abstract:
"""{abstract}"""

Reference papers:
{references}

Related work:
)";
}

std::string GenerationTemplates::DefaultPlanGiven() {
  return R"(You will be given the abstract of a scientific paper and the abstracts of its reference papers, each in triple quotes. Write the related work section of the paper using only this material. Build one cohesive story: compare the strengths and weaknesses of the prior work and use them to motivate the proposed approach. Refer to a reference paper only through its citation key, for example @cite_1. Do not cite the main abstract, do not use bullet points and do not add a reference list at the end.

Follow the sentence plan exactly. It fixes the number of sentences, the length in words and the sentence (line) on which each citation key must appear.

Sentence plan: {plan}

Main abstract:
"""{abstract}"""

Reference papers:
{references}

Related work:
)";
}

std::string GenerationTemplates::DefaultPlanLearned() {
  return R"(You will be given the abstract of a scientific paper and the abstracts of its reference papers, each in triple quotes. Write the related work section of the paper using only this material. Refer to a reference paper only through its citation key, for example @cite_1. Do not cite the main abstract, do not use bullet points and do not add a reference list at the end.

First write a sentence plan on a single line, in exactly this form:
Please generate <number> sentences in <number> words. Cite @cite_1 at line 1 and 3. Cite @cite_2 at line 2.
Then write "Related work:" on its own line, followed by a section that follows your plan.

Main abstract:
"""{abstract}"""

Reference papers:
{references}
)";
}

std::string GenerationTemplates::DefaultPerCite() {
  return R"(You are drafting the related work section of the paper described by the main abstract. Write one or two sentences that describe the reference paper below and relate it to the main paper. Cite it with its key {key}.

Main abstract:
"""{abstract}"""

Reference paper:
{references}

Sentences:
)";
}

std::string GenerationTemplates::DefaultPerCiteMerge() {
  return R"(Below is a rough draft of a related work section, written one reference at a time. Rewrite it as one cohesive related work section for the main paper. Keep every citation key such as @cite_1 exactly as written and do not add new ones.

Main abstract:
"""{abstract}"""

Draft:
{draft}

Related work:
)";
}

std::string GenerationTemplates::DefaultSentenceStep() {
  return R"(You are writing the related work section of the main paper one sentence at a time. The full section has {num_sentences} sentences. Write only sentence {line}. {cite_instruction}

Main abstract:
"""{abstract}"""

Reference papers for this sentence:
{references}

Section so far:
{draft}

Sentence {line}:
)";
}

GenerationTemplates GenerationTemplates::LoadFromDir(const std::filesystem::path& dir) {
  GenerationTemplates t;
  auto load = [&](const char* name, PromptTemplate& slot) {
    const auto path = dir / name;
    if (std::filesystem::exists(path)) slot = PromptTemplate::FromFile(path);
  };
  load("zero_shot.txt", t.zero_shot);
  load("plan_given.txt", t.plan_given);
  load("plan_learned.txt", t.plan_learned);
  load("per_cite.txt", t.per_cite);
  load("per_cite_merge.txt", t.per_cite_merge);
  load("sentence_by_sentence.txt", t.sentence_step);
  return t;
}

std::string RenderReferences(const std::map<CitationKey, std::string>& refs) {
  std::string out;
  for (const auto& [k, abstract] : refs) out += k.ToString() + ": \"\"\"" + text::CollapseWhitespace(abstract) + "\"\"\"\n";
  return out;
}

namespace {

struct Caller {
  llm::Gateway& gateway;
  const GenerationOptions& opts;
  int calls = 0;

  std::string Call(const PromptTemplate& tpl, const std::map<std::string, std::string>& vars) {
    llm::CompletionRequest req;
    req.system_text = opts.system_text;
    req.user_text = tpl.Render(vars);
    req.max_output_tokens = opts.max_output_tokens;
    req.temperature = opts.temperature;
    ++calls;
    return gateway.Complete(req).text;
  }
};

std::map<std::string, std::string> BaseVars(const GenerationRequest& req) {
  return {{"abstract", text::CollapseWhitespace(req.query_abstract)},
          {"references", RenderReferences(req.references)},
          {"plan", req.plan ? RenderPlan(*req.plan) : ""},
          {"draft", ""},
          {"key", ""},
          {"line", ""},
          {"num_sentences", req.plan ? std::to_string(req.plan->num_sentences) : ""},
          {"cite_instruction", ""}};
}

std::string StripLabel(std::string_view line, std::string_view label) {
  if (text::StartsWith(text::ToLower(line), label)) return std::string(text::Trim(line.substr(label.size())));
  return std::string(line);
}

// Splits a plan_learned completion into the echoed plan and the section.
std::string SplitLearnedPlan(const std::string& raw, GeneratedReview& out) {
  const auto lines = text::SplitLines(raw);
  std::size_t i = 0;
  while (i < lines.size() && text::Trim(lines[i]).empty()) ++i;
  if (i == lines.size()) {
    out.flags.push_back("plan_echo_missing");
    return "";
  }
  std::string first = StripLabel(text::Trim(lines[i]), "sentence plan:");
  first = StripLabel(first, "plan:");
  if (!text::StartsWith(text::ToLower(first), "please generate")) {
    out.flags.push_back("plan_echo_missing");
    return raw;
  }
  std::string plan_text = first;
  ++i;
  while (i < lines.size() && text::StartsWith(text::ToLower(text::Trim(lines[i])), "cite ")) {
    plan_text += " ";
    plan_text += text::Trim(lines[i]);
    ++i;
  }
  try {
    out.plan_echo = ParsePlan(plan_text);
  } catch (const Error&) {
    out.flags.push_back("plan_echo_unparseable");
  }
  std::vector<std::string> body;
  bool label_seen = false;
  for (; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!label_seen && body.empty()) {
      if (text::Trim(line).empty()) continue;
      const auto stripped = StripLabel(text::Trim(line), "related work:");
      if (stripped != text::Trim(line)) {
        label_seen = true;
        if (stripped.empty()) continue;
        line = stripped;
      }
    }
    body.push_back(line);
  }
  return text::Join(body, "\n");
}

std::string CiteInstruction(const std::set<CitationKey>& keys) {
  if (keys.empty()) return "Do not cite any reference in this sentence.";
  std::vector<std::string> names;
  for (const auto& k : keys) names.push_back(k.ToString());
  std::string joined;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) joined += (i + 1 == names.size()) ? " and " : ", ";
    joined += names[i];
  }
  return "Cite " + joined + " in this sentence.";
}

}  // namespace

GeneratedReview Generate(llm::Gateway& gateway, const GenerationRequest& req, const GenerationOptions& opts) {
  req.Validate();
  GeneratedReview out;
  Caller caller{gateway, opts};
  auto vars = BaseVars(req);
  std::string raw;

  switch (req.strategy) {
    case Strategy::kZeroShot:
      raw = caller.Call(opts.templates.zero_shot, vars);
      break;
    case Strategy::kPlanGiven:
      raw = caller.Call(opts.templates.plan_given, vars);
      break;
    case Strategy::kPlanLearned:
      raw = SplitLearnedPlan(caller.Call(opts.templates.plan_learned, vars), out);
      break;
    case Strategy::kPerCite: {
      std::vector<std::pair<CitationKey, std::string>> refs(req.references.begin(), req.references.end());
      std::vector<std::string> drafts(refs.size());
      std::vector<std::map<std::string, std::string>> per_vars(refs.size(), vars);
      for (std::size_t i = 0; i < refs.size(); ++i) {
        per_vars[i]["key"] = refs[i].first.ToString();
        per_vars[i]["references"] = RenderReferences({refs[i]});
      }
      if (opts.parallelism <= 1) {
        for (std::size_t i = 0; i < refs.size(); ++i) {
          drafts[i] = text::Trim(caller.Call(opts.templates.per_cite, per_vars[i]));
        }
      } else {
        std::counting_semaphore<> slots(opts.parallelism);
        std::vector<std::future<std::string>> pending;
        for (std::size_t i = 0; i < refs.size(); ++i) {
          slots.acquire();
          pending.push_back(std::async(std::launch::async, [&, i] {
            struct Release {
              std::counting_semaphore<>& s;
              ~Release() { s.release(); }
            } release{slots};
            Caller local{gateway, opts};
            return std::string(text::Trim(local.Call(opts.templates.per_cite, per_vars[i])));
          }));
        }
        for (std::size_t i = 0; i < pending.size(); ++i) drafts[i] = pending[i].get();
        caller.calls += static_cast<int>(refs.size());
      }
      vars["draft"] = text::Join(drafts, "\n");
      raw = caller.Call(opts.templates.per_cite_merge, vars);
      break;
    }
    case Strategy::kSentenceBySentence: {
      const auto& plan = *req.plan;
      std::vector<std::string> written;
      for (int line = 1; line <= plan.num_sentences; ++line) {
        auto step = vars;
        std::set<CitationKey> line_keys;
        if (auto it = plan.assignments.find(line); it != plan.assignments.end()) line_keys = it->second;
        std::map<CitationKey, std::string> line_refs;
        for (const auto& k : line_keys) line_refs[k] = req.references.at(k);
        step["line"] = std::to_string(line);
        step["cite_instruction"] = CiteInstruction(line_keys);
        step["references"] = line_refs.empty() ? "(none)\n" : RenderReferences(line_refs);
        step["draft"] = written.empty() ? "(empty)" : text::Join(written, " ");
        auto sentence = text::CollapseWhitespace(caller.Call(opts.templates.sentence_step, step));
        if (opts.splitter(sentence).size() > 1) out.flags.push_back("multi_sentence_step:" + std::to_string(line));
        written.push_back(std::move(sentence));
      }
      raw = text::Join(written, " ");
      break;
    }
  }

  out.llm_calls = caller.calls;
  out.text = text::Trim(raw);
  out.sentences = opts.splitter(out.text);
  out.cited_keys_in_text = ExtractCitationKeys(out.text);
  const auto known = req.Keys();
  for (const auto& k : DistinctKeys(out.cited_keys_in_text)) {
    if (!known.count(k)) out.hallucinated_keys.push_back(k);
  }
  if (!out.hallucinated_keys.empty()) out.flags.push_back("hallucinated_keys");
  if (out.text.empty()) out.flags.push_back("empty_output");
  return out;
}

std::string Relexicalize(std::string_view text_in, const std::map<CitationKey, std::string>& mapping,
                         std::string_view command_template) {
  static const std::regex kKey(R"(@cite_(\d+)\b)");
  const std::string s(text_in);
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kKey); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const auto digits = m[1].str();
    const CitationKey key{digits.size() > 9 ? 999999999 : std::stoi(digits)};
    auto found = mapping.find(key);
    if (found == mapping.end()) {
      throw Error(ErrorCode::kUnknownKeyInText, "no identifier mapped for " + m.str());
    }
    out.append(s, last, static_cast<std::size_t>(m.position()) - last);
    std::string cmd(command_template);
    if (auto pos = cmd.find("KEY"); pos != std::string::npos) cmd.replace(pos, 3, found->second);
    out += cmd;
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(s, last);
  return out;
}

nlohmann::json ToJson(const SentencePlan& plan) {
  nlohmann::json assignments = nlohmann::json::object();
  for (const auto& [line, keys] : plan.assignments) {
    auto arr = nlohmann::json::array();
    for (const auto& k : keys) arr.push_back(k.ToString());
    assignments[std::to_string(line)] = arr;
  }
  return {{"num_sentences", plan.num_sentences},
          {"num_words", plan.num_words},
          {"assignments", assignments},
          {"rendered", RenderPlan(plan)}};
}

nlohmann::json ToJson(const GeneratedReview& review) {
  auto keys = [](const std::vector<CitationKey>& ks) {
    auto arr = nlohmann::json::array();
    for (const auto& k : ks) arr.push_back(k.ToString());
    return arr;
  };
  return {{"text", review.text},
          {"sentences", review.sentences},
          {"cited_keys_in_text", keys(review.cited_keys_in_text)},
          {"plan_echo", review.plan_echo ? nlohmann::json(RenderPlan(*review.plan_echo)) : nlohmann::json()},
          {"hallucinated_keys", keys(review.hallucinated_keys)},
          {"flags", review.flags},
          {"llm_calls", review.llm_calls}};
}

}  // namespace litrev::gen
