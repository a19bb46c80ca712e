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

#include "recallprobe/oracle.hpp"

#include <algorithm>
#include <set>

#include "recallprobe/error.hpp"

namespace recallprobe {

std::string_view to_string(QueryOutcome o) {
  switch (o) {
    case QueryOutcome::kRecalled: return "recalled";
    case QueryOutcome::kMissed: return "missed";
    case QueryOutcome::kGated: return "gated";
    case QueryOutcome::kUnexecuted: return "unexecuted";
  }
  return "unexecuted";
}

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::kConsistentAllTrue: return "consistent_all_true";
    case Classification::kSuppressedAllFalse: return "suppressed_all_false";
    case Classification::kViolation: return "violation";
    case Classification::kIneligible: return "ineligible";
    case Classification::kIncomplete: return "incomplete";
  }
  return "incomplete";
}

QueryOutcome parse_query_outcome(std::string_view s) {
  for (auto o : {QueryOutcome::kRecalled, QueryOutcome::kMissed, QueryOutcome::kGated,
                 QueryOutcome::kUnexecuted}) {
    if (to_string(o) == s) return o;
  }
  throw ParseError("unknown query outcome: " + std::string(s));
}

Classification parse_classification(std::string_view s) {
  for (auto c : {Classification::kConsistentAllTrue, Classification::kSuppressedAllFalse,
                 Classification::kViolation, Classification::kIneligible,
                 Classification::kIncomplete}) {
    if (to_string(c) == s) return c;
  }
  throw ParseError("unknown classification: " + std::string(s));
}

std::string finding_id(std::string_view shop_id, std::size_t query_index) {
  return std::string(shop_id) + "#" + std::to_string(query_index);
}

GroupEvaluation evaluate_group(const QueryGroup& group, std::span<const QueryOutcome> outcomes,
                               const nlohmann::json& context, std::string_view run_id) {
  if (outcomes.size() != group.queries.size()) {
    throw ContractError("group " + group.target_shop_id + " has " +
                        std::to_string(group.queries.size()) + " queries but " +
                        std::to_string(outcomes.size()) + " outcomes");
  }
  GroupEvaluation eval;
  eval.verdict.target_shop_id = group.target_shop_id;
  eval.verdict.outcomes.assign(outcomes.begin(), outcomes.end());

  if (!group.eligible()) {
    eval.verdict.classification = Classification::kIneligible;
    return eval;
  }
  const bool complete = std::all_of(outcomes.begin(), outcomes.end(), [](QueryOutcome o) {
    return o == QueryOutcome::kRecalled || o == QueryOutcome::kMissed;
  });
  if (!complete) {
    eval.verdict.classification = Classification::kIncomplete;
    return eval;
  }

  const auto trues = std::count(outcomes.begin(), outcomes.end(), QueryOutcome::kRecalled);
  if (trues == static_cast<std::ptrdiff_t>(outcomes.size())) {
    eval.verdict.classification = Classification::kConsistentAllTrue;
    return eval;
  }
  if (trues == 0) {
    eval.verdict.classification = Classification::kSuppressedAllFalse;
    return eval;
  }

  eval.verdict.classification = Classification::kViolation;
  std::vector<TestQuery> witnesses;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i] == QueryOutcome::kRecalled) witnesses.push_back(group.queries[i]);
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i] != QueryOutcome::kMissed) continue;
    eval.findings.push_back({finding_id(group.target_shop_id, i), group.target_shop_id,
                             group.queries[i], witnesses, context, std::string(run_id)});
  }
  return eval;
}

GroupEvaluation evaluate_group(const QueryGroup& group, const std::vector<bool>& outcomes,
                               const nlohmann::json& context, std::string_view run_id) {
  std::vector<QueryOutcome> o;
  o.reserve(outcomes.size());
  for (bool y : outcomes) o.push_back(y ? QueryOutcome::kRecalled : QueryOutcome::kMissed);
  return evaluate_group(group, o, context, run_id);
}

RunEvaluation evaluate_run(std::span<const GroupRun> runs, std::string_view run_id) {
  RunEvaluation out;
  for (const auto& run : runs) {
    try {
      auto eval = evaluate_group(run.group, run.outcomes, run.context, run_id);
      out.verdicts.push_back(std::move(eval.verdict));
      for (auto& f : eval.findings) out.findings.push_back(std::move(f));
    } catch (const ContractError& e) {
      out.errors.emplace_back(e.what());
    }
  }
  std::stable_sort(out.verdicts.begin(), out.verdicts.end(),
                   [](const GroupVerdict& a, const GroupVerdict& b) {
                     return a.target_shop_id < b.target_shop_id;
                   });
  std::stable_sort(out.findings.begin(), out.findings.end(),
                   [](const MissedRecallFinding& a, const MissedRecallFinding& b) {
                     if (a.target_shop_id != b.target_shop_id) {
                       return a.target_shop_id < b.target_shop_id;
                     }
                     return a.failing_query.text < b.failing_query.text;
                   });
  std::set<std::string> shops;
  for (const auto& v : out.verdicts) {
    ++out.tallies.groups[v.classification];
    out.tallies.executed_queries += static_cast<std::size_t>(
        std::count_if(v.outcomes.begin(), v.outcomes.end(), [](QueryOutcome o) {
          return o == QueryOutcome::kRecalled || o == QueryOutcome::kMissed;
        }));
  }
  for (const auto& f : out.findings) shops.insert(f.target_shop_id);
  out.tallies.finding_entries = out.findings.size();
  out.tallies.finding_shops = shops.size();
  return out;
}

void to_json(nlohmann::json& j, const GroupVerdict& v) {
  nlohmann::json outcomes = nlohmann::json::array();
  for (auto o : v.outcomes) outcomes.push_back(std::string(to_string(o)));
  j = nlohmann::json{{"target_shop_id", v.target_shop_id},
                     {"outcomes", std::move(outcomes)},
                     {"classification", std::string(to_string(v.classification))}};
}

void from_json(const nlohmann::json& j, GroupVerdict& v) {
  v.target_shop_id = j.at("target_shop_id").get<std::string>();
  v.outcomes.clear();
  for (const auto& o : j.at("outcomes")) v.outcomes.push_back(parse_query_outcome(o.get<std::string>()));
  v.classification = parse_classification(j.at("classification").get<std::string>());
}

void to_json(nlohmann::json& j, const MissedRecallFinding& f) {
  j = nlohmann::json{{"finding_id", f.finding_id},
                     {"target_shop_id", f.target_shop_id},
                     {"failing_query", f.failing_query},
                     {"witnesses", f.witnesses},
                     {"context", f.context},
                     {"run_id", f.run_id}};
}

void from_json(const nlohmann::json& j, MissedRecallFinding& f) {
  f.finding_id = j.at("finding_id").get<std::string>();
  f.target_shop_id = j.at("target_shop_id").get<std::string>();
  f.failing_query = j.at("failing_query").get<TestQuery>();
  f.witnesses = j.at("witnesses").get<std::vector<TestQuery>>();
  f.context = j.value("context", nlohmann::json());
  f.run_id = j.value("run_id", std::string{});
}

}  // namespace recallprobe
