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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recallprobe/catalog.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/llm.hpp"

namespace recallprobe {

/// Which generation step produced a query.
enum class Derivation { kName, kServiceProduct, kLocation };

/// How the query's concept relates to the shop.
enum class ConceptRelation { kEquivalent, kIncluding, kIncluded, kUnknown };

enum class QuerySource { kLlm, kTemplate };

std::string_view to_string(Derivation d);
std::string_view to_string(ConceptRelation r);
std::string_view to_string(QuerySource s);
Derivation parse_derivation(std::string_view s);
ConceptRelation parse_concept_relation(std::string_view s);
QuerySource parse_query_source(std::string_view s);

struct TestQuery {
  std::string text;
  std::string target_shop_id;
  Derivation derivation = Derivation::kName;
  ConceptRelation concept_relation = ConceptRelation::kUnknown;
  QuerySource source = QuerySource::kTemplate;

  bool operator==(const TestQuery&) const = default;
};

inline constexpr std::size_t kMinGroupSize = 2;
inline constexpr std::size_t kMaxGroupSize = 6;

/// Queries X_1..X_n bound to one target shop. Queries are pairwise distinct
/// under text::fold_key.
struct QueryGroup {
  std::string target_shop_id;
  std::vector<TestQuery> queries;

  /// At least two queries; smaller groups never reach the oracle.
  bool eligible() const { return queries.size() >= kMinGroupSize; }

  bool operator==(const QueryGroup&) const = default;
};

/// Appends `q` unless an equivalent query is already present. Returns true
/// when appended.
bool add_unique(QueryGroup& group, TestQuery q);

/// Keeps at most `max_size` queries, first taking the earliest query of each
/// derivation (in order of first appearance), then filling up in input
/// order. Output preserves input order.
QueryGroup truncate_group(const QueryGroup& group, std::size_t max_size = kMaxGroupSize);

class EmptyOutputError : public Error {
 public:
  using Error::Error;
};

struct ParsedQuery {
  std::string text;
  // Section label the query appeared under; nullopt for unlabeled output.
  std::optional<Derivation> derivation;
};

/// Extracts queries from numbered-list or line-delimited completion text.
/// Section headers such as "[name]" set the derivation of the lines below
/// them. Numbering, bullets and surrounding quotes are stripped, empties
/// dropped, order kept, case-insensitive duplicates removed (first wins).
/// Throws EmptyOutputError when nothing is left.
std::vector<ParsedQuery> parse_labeled_llm_output(std::string_view raw);

std::vector<std::string> parse_llm_output(std::string_view raw);

/// Generation prompt -> completion -> parsed group tagged source=llm.
/// Gateway errors propagate. The returned group may be ineligible.
QueryGroup generate_llm(const Shop& shop, const llm::PromptTemplate& tmpl, llm::Gateway& gateway);

struct TemplateRules {
  std::size_t min_token_length = 2;  // code points
  // First + last token of names with three or more tokens.
  bool abbreviation = true;
  // "type + branch" when the name carries a parenthetical branch suffix.
  bool branch_location = true;
  std::size_t max_group_size = kMaxGroupSize;
};

/// Deterministic offline generator: full name, name without parenthetical
/// suffix, shop type and its head token, type + branch and type + city,
/// abbreviation, and each name token. Deduplicated and capped.
QueryGroup generate_template(const Shop& shop, const TemplateRules& rules = {});

void to_json(nlohmann::json& j, const TestQuery& q);
void from_json(const nlohmann::json& j, TestQuery& q);
void to_json(nlohmann::json& j, const QueryGroup& g);
void from_json(const nlohmann::json& j, QueryGroup& g);

}  // namespace recallprobe
