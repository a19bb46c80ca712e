// Copyright 2026 The recallprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "recallprobe/validation.hpp"

#include <set>

#include "recallprobe/text.hpp"

namespace recallprobe {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kReasonable: return "reasonable";
    case Verdict::kUnreasonable: return "unreasonable";
    case Verdict::kUnclear: return "unclear";
  }
  return "unclear";
}

std::string_view to_string(Judge j) { return j == Judge::kLlm ? "llm" : "rule"; }

Verdict parse_verdict(std::string_view s) {
  if (s == "reasonable") return Verdict::kReasonable;
  if (s == "unreasonable") return Verdict::kUnreasonable;
  if (s == "unclear") return Verdict::kUnclear;
  throw ParseError("unknown verdict: " + std::string(s));
}

Verdict parse_judge_reply(std::string_view reply) {
  const auto tokens = text::folded_tokens(reply);
  if (tokens.empty()) return Verdict::kUnclear;
  if (tokens.front() == "keep") return Verdict::kReasonable;
  if (tokens.front() == "drop") return Verdict::kUnreasonable;
  return Verdict::kUnclear;
}

ValidationVerdict validate_llm(const Shop& shop, const TestQuery& query, llm::Gateway& gateway,
                               std::span<const llm::LabeledExample> examples) {
  const auto request = llm::assemble_validation_prompt(shop, query.text, examples);
  const auto completion = gateway.complete(request);
  return {query.text, parse_judge_reply(completion.text), text::normalize(completion.text),
          Judge::kLlm};
}

ValidationVerdict validate_llm(const Shop& shop, const TestQuery& query, llm::Gateway& gateway) {
  const auto examples = llm::default_validation_examples();
  return validate_llm(shop, query, gateway, examples);
}

ValidationVerdict validate_llm_cautious(const Shop& shop, const TestQuery& query,
                                        llm::Gateway& gateway) {
  try {
    return validate_llm(shop, query, gateway);
  } catch (const llm::TransportError& e) {
    return {query.text, Verdict::kUnclear,
            "judge unavailable: " + std::string(llm::to_string(e.kind())), Judge::kLlm};
  }
}

ValidationVerdict validate_rule(const Shop& shop, const TestQuery& query,
                                const RuleValidatorConfig& config) {
  const std::string q = text::normalize(query.text);
  if (q.empty()) return {query.text, Verdict::kUnreasonable, "empty query", Judge::kRule};
  if (text::length(q) > config.max_query_length) {
    return {query.text, Verdict::kUnreasonable,
            "longer than " + std::to_string(config.max_query_length) + " characters",
            Judge::kRule};
  }
  std::set<std::string> shop_tokens;
  for (const auto* field : {&shop.name, &shop.shop_type, &shop.city}) {
    for (auto& t : text::folded_tokens(*field)) shop_tokens.insert(std::move(t));
  }
  for (const auto& t : text::folded_tokens(q)) {
    if (shop_tokens.contains(t)) {
      return {query.text, Verdict::kReasonable, "shares token '" + t + "' with the shop",
              Judge::kRule};
    }
  }
  return {query.text, Verdict::kUnreasonable, "no token in common with the shop", Judge::kRule};
}

FilterResult filter_group(const QueryGroup& group, std::span<const ValidationVerdict> verdicts) {
  FilterResult result{{group.target_shop_id, {}}, {}};
  for (const auto& q : group.queries) {
    const std::string key = text::fold_key(q.text);
    const ValidationVerdict* match = nullptr;
    for (const auto& v : verdicts) {
      if (text::fold_key(v.query_text) == key) {
        match = &v;
        break;
      }
    }
    if (match == nullptr) throw ContractError("no verdict for query '" + q.text + "'");
    if (match->verdict == Verdict::kReasonable) {
      result.group.queries.push_back(q);
    } else {
      result.dropped.push_back({q, match->verdict, match->rationale});
    }
  }
  return result;
}

void to_json(nlohmann::json& j, const ValidationVerdict& v) {
  j = nlohmann::json{{"query", v.query_text},
                     {"verdict", std::string(to_string(v.verdict))},
                     {"rationale", v.rationale},
                     {"judge", std::string(to_string(v.judge))}};
}

void from_json(const nlohmann::json& j, ValidationVerdict& v) {
  v.query_text = j.at("query").get<std::string>();
  v.verdict = parse_verdict(j.at("verdict").get<std::string>());
  v.rationale = j.value("rationale", std::string{});
  v.judge = j.value("judge", std::string("rule")) == "llm" ? Judge::kLlm : Judge::kRule;
}

void to_json(nlohmann::json& j, const DroppedQuery& d) {
  j = nlohmann::json{{"query", d.query},
                     {"verdict", std::string(to_string(d.verdict))},
                     {"reason", d.reason}};
}

void from_json(const nlohmann::json& j, DroppedQuery& d) {
  d.query = j.at("query").get<TestQuery>();
  d.verdict = parse_verdict(j.at("verdict").get<std::string>());
  d.reason = j.value("reason", std::string{});
}

}  // namespace recallprobe
