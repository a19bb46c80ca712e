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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recallprobe/catalog.hpp"
#include "recallprobe/generation.hpp"
#include "recallprobe/llm.hpp"

namespace recallprobe {

enum class Verdict { kReasonable, kUnreasonable, kUnclear };
enum class Judge { kLlm, kRule };

std::string_view to_string(Verdict v);
std::string_view to_string(Judge j);
Verdict parse_verdict(std::string_view s);

struct ValidationVerdict {
  std::string query_text;
  Verdict verdict = Verdict::kUnclear;
  std::string rationale;
  Judge judge = Judge::kRule;

  bool operator==(const ValidationVerdict&) const = default;
};

/// Keyword protocol: first token KEEP -> reasonable, DROP -> unreasonable
/// (case-insensitive); anything else is unclear.
Verdict parse_judge_reply(std::string_view reply);

/// Asks the judge model whether `query` is reasonable for `shop`. Gateway
/// errors propagate.
ValidationVerdict validate_llm(const Shop& shop, const TestQuery& query, llm::Gateway& gateway,
                               std::span<const llm::LabeledExample> examples);
ValidationVerdict validate_llm(const Shop& shop, const TestQuery& query, llm::Gateway& gateway);

/// validate_llm with transport failures mapped to unclear, so a flaky judge
/// drops the query instead of aborting the run.
ValidationVerdict validate_llm_cautious(const Shop& shop, const TestQuery& query,
                                        llm::Gateway& gateway);

struct RuleValidatorConfig {
  std::size_t max_query_length = 64;  // code points
};

/// Offline baseline: reasonable iff non-empty, not longer than the cap and
/// sharing a normalized token with the shop's name, type or city.
ValidationVerdict validate_rule(const Shop& shop, const TestQuery& query,
                                const RuleValidatorConfig& config = {});

struct DroppedQuery {
  TestQuery query;
  Verdict verdict = Verdict::kUnclear;
  std::string reason;
};

struct FilterResult {
  QueryGroup group;
  std::vector<DroppedQuery> dropped;

  bool eligible() const { return group.eligible(); }
};

/// Keeps exactly the queries judged reasonable. Verdicts are matched to
/// queries by fold_key of the text; a query without a verdict is a
/// ContractError.
FilterResult filter_group(const QueryGroup& group, std::span<const ValidationVerdict> verdicts);

void to_json(nlohmann::json& j, const ValidationVerdict& v);
void from_json(const nlohmann::json& j, ValidationVerdict& v);
void to_json(nlohmann::json& j, const DroppedQuery& d);
void from_json(const nlohmann::json& j, DroppedQuery& d);

}  // namespace recallprobe
