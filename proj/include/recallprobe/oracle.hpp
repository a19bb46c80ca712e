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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recallprobe/generation.hpp"

namespace recallprobe {

/// Execution outcome of one query. Only kRecalled/kMissed are executed
/// outcomes (y = true / false).
enum class QueryOutcome { kRecalled, kMissed, kGated, kUnexecuted };

enum class Classification {
  kConsistentAllTrue,
  kSuppressedAllFalse,
  kViolation,
  kIneligible,
  kIncomplete,
};

std::string_view to_string(QueryOutcome o);
std::string_view to_string(Classification c);
QueryOutcome parse_query_outcome(std::string_view s);
Classification parse_classification(std::string_view s);

struct GroupVerdict {
  std::string target_shop_id;
  std::vector<QueryOutcome> outcomes;  // query order
  Classification classification = Classification::kIneligible;

  bool operator==(const GroupVerdict&) const = default;
};

/// One query that failed to recall its target while at least one sibling
/// query (a witness) recalled it.
struct MissedRecallFinding {
  std::string finding_id;  // "<shop id>#<query index>"
  std::string target_shop_id;
  TestQuery failing_query;
  std::vector<TestQuery> witnesses;
  nlohmann::json context;
  std::string run_id;

  bool operator==(const MissedRecallFinding&) const = default;
};

struct GroupEvaluation {
  GroupVerdict verdict;
  std::vector<MissedRecallFinding> findings;
};

/// Applies the group consistency relation: a group is a violation exactly
/// when some query recalls the target and another does not; every
/// non-recalling query of a violation group becomes one finding whose
/// witnesses are all recalling queries. All-false groups are suppressed.
/// Groups under two queries are ineligible; a gated or unexecuted query makes
/// the group incomplete. Throws ContractError on an arity mismatch.
GroupEvaluation evaluate_group(const QueryGroup& group, std::span<const QueryOutcome> outcomes,
                               const nlohmann::json& context = nullptr,
                               std::string_view run_id = {});

/// Boolean convenience form: true -> kRecalled, false -> kMissed.
GroupEvaluation evaluate_group(const QueryGroup& group, const std::vector<bool>& outcomes,
                               const nlohmann::json& context = nullptr,
                               std::string_view run_id = {});

std::string finding_id(std::string_view shop_id, std::size_t query_index);

struct GroupRun {
  QueryGroup group;
  std::vector<QueryOutcome> outcomes;
  nlohmann::json context;
};

struct RunTallies {
  std::map<Classification, std::size_t> groups;
  std::size_t finding_entries = 0;
  std::size_t finding_shops = 0;
  std::size_t executed_queries = 0;
};

struct RunEvaluation {
  std::vector<GroupVerdict> verdicts;             // by shop id
  std::vector<MissedRecallFinding> findings;      // by (shop id, query text)
  RunTallies tallies;
  std::vector<std::string> errors;                // per-group contract errors
};

RunEvaluation evaluate_run(std::span<const GroupRun> runs, std::string_view run_id = {});

void to_json(nlohmann::json& j, const GroupVerdict& v);
void from_json(const nlohmann::json& j, GroupVerdict& v);
void to_json(nlohmann::json& j, const MissedRecallFinding& f);
void from_json(const nlohmann::json& j, MissedRecallFinding& f);

}  // namespace recallprobe
