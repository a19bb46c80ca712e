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

#include "recallprobe/generation.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "recallprobe/text.hpp"

namespace recallprobe {

std::string_view to_string(Derivation d) {
  switch (d) {
    case Derivation::kName: return "name";
    case Derivation::kServiceProduct: return "service_product";
    case Derivation::kLocation: return "location";
  }
  return "name";
}

std::string_view to_string(ConceptRelation r) {
  switch (r) {
    case ConceptRelation::kEquivalent: return "equivalent";
    case ConceptRelation::kIncluding: return "including";
    case ConceptRelation::kIncluded: return "included";
    case ConceptRelation::kUnknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(QuerySource s) { return s == QuerySource::kLlm ? "llm" : "template"; }

Derivation parse_derivation(std::string_view s) {
  if (s == "name") return Derivation::kName;
  if (s == "service_product") return Derivation::kServiceProduct;
  if (s == "location") return Derivation::kLocation;
  throw ParseError("unknown derivation: " + std::string(s));
}

ConceptRelation parse_concept_relation(std::string_view s) {
  if (s == "equivalent") return ConceptRelation::kEquivalent;
  if (s == "including") return ConceptRelation::kIncluding;
  if (s == "included") return ConceptRelation::kIncluded;
  if (s == "unknown") return ConceptRelation::kUnknown;
  throw ParseError("unknown concept relation: " + std::string(s));
}

QuerySource parse_query_source(std::string_view s) {
  if (s == "llm") return QuerySource::kLlm;
  if (s == "template") return QuerySource::kTemplate;
  throw ParseError("unknown query source: " + std::string(s));
}

bool add_unique(QueryGroup& group, TestQuery q) {
  q.text = text::normalize(q.text);
  if (q.text.empty()) return false;
  const std::string key = text::fold_key(q.text);
  for (const auto& existing : group.queries) {
    if (text::fold_key(existing.text) == key) return false;
  }
  q.target_shop_id = group.target_shop_id;
  group.queries.push_back(std::move(q));
  return true;
}

QueryGroup truncate_group(const QueryGroup& group, std::size_t max_size) {
  if (group.queries.size() <= max_size) return group;
  std::vector<bool> keep(group.queries.size(), false);
  std::size_t kept = 0;
  std::set<Derivation> seen;
  for (std::size_t i = 0; i < group.queries.size() && kept < max_size; ++i) {
    if (seen.insert(group.queries[i].derivation).second) {
      keep[i] = true;
      ++kept;
    }
  }
  for (std::size_t i = 0; i < group.queries.size() && kept < max_size; ++i) {
    if (!keep[i]) {
      keep[i] = true;
      ++kept;
    }
  }
  QueryGroup out{group.target_shop_id, {}};
  for (std::size_t i = 0; i < group.queries.size(); ++i) {
    if (keep[i]) out.queries.push_back(group.queries[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Completion parsing.

namespace {

constexpr std::array<std::string_view, 4> kBulletPrefixes = {"- ", "* ", "• ", "· "};

// Pairs of (open, close) quote marks.
constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kQuotePairs = {{
    {"\"", "\""},
    {"'", "'"},
    {"“", "”"},
    {"‘", "’"},
    {"「", "」"},
    {"『", "』"},
}};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// "1." "1)" "(1)" "1、" "1:" "1：" "1）" followed by optional space.
bool strip_numbering(std::string& s) {
  std::size_t i = 0;
  const bool paren = !s.empty() && s[0] == '(';
  if (paren) ++i;
  const std::size_t digits_start = i;
  while (i < s.size() && is_digit(s[i]) && i - digits_start < 3) ++i;
  if (i == digits_start) return false;
  std::size_t after = 0;
  const std::string_view rest = std::string_view(s).substr(i);
  if (paren) {
    if (!rest.starts_with(")")) return false;
    after = 1;
  } else if (rest.starts_with(".") || rest.starts_with(")") || rest.starts_with(":")) {
    after = 1;
  } else if (rest.starts_with("、") || rest.starts_with("：") ||
             rest.starts_with("）") || rest.starts_with("．")) {
    after = 3;
  } else {
    return false;
  }
  // "3.5 stars" is not numbering.
  const std::size_t next = i + after;
  if (next < s.size() && is_digit(s[next])) return false;
  s = text::normalize(std::string_view(s).substr(next));
  return true;
}

bool strip_bullet(std::string& s) {
  for (auto b : kBulletPrefixes) {
    if (s.starts_with(b)) {
      s = text::normalize(std::string_view(s).substr(b.size()));
      return true;
    }
  }
  return false;
}

bool strip_quotes(std::string& s) {
  for (const auto& [open, close] : kQuotePairs) {
    if (s.size() >= open.size() + close.size() + 1 && s.starts_with(open) && s.ends_with(close)) {
      s = text::normalize(
          std::string_view(s).substr(open.size(), s.size() - open.size() - close.size()));
      return true;
    }
  }
  return false;
}

std::string strip_markers(std::string s) {
  s = text::normalize(s);
  while (strip_numbering(s) || strip_bullet(s) || strip_quotes(s)) {
  }
  return s;
}

std::optional<Derivation> label_derivation(std::string_view label) {
  const std::string l = text::fold_key(label);
  if (l.find("service") != std::string::npos || l.find("product") != std::string::npos ||
      l.find("服务") != std::string::npos || l.find("商品") != std::string::npos) {
    return Derivation::kServiceProduct;
  }
  if (l.find("location") != std::string::npos || l.find("位置") != std::string::npos) {
    return Derivation::kLocation;
  }
  if (l.find("name") != std::string::npos || l.find("店名") != std::string::npos) {
    return Derivation::kName;
  }
  return std::nullopt;
}

// A header is "[label]", "【label】" or "label:" where label names a step.
// Returns true for a header line; `derivation` receives its step, if known.
bool parse_header(const std::string& line, std::optional<Derivation>& derivation) {
  if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
    derivation = label_derivation(std::string_view(line).substr(1, line.size() - 2));
    return true;
  }
  if (line.starts_with("【") && line.ends_with("】") && line.size() > 6) {
    derivation = label_derivation(std::string_view(line).substr(3, line.size() - 6));
    return true;
  }
  for (std::string_view colon : {std::string_view(":"), std::string_view("：")}) {
    if (line.size() > colon.size() && line.ends_with(colon)) {
      auto d = label_derivation(std::string_view(line).substr(0, line.size() - colon.size()));
      if (d) {
        derivation = d;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

std::vector<ParsedQuery> parse_labeled_llm_output(std::string_view raw) {
  std::vector<ParsedQuery> out;
  std::set<std::string> seen;
  std::optional<Derivation> section;
  std::size_t start = 0;
  while (start <= raw.size()) {
    const auto nl = raw.find('\n', start);
    const std::string_view line_raw =
        raw.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    const std::string line = strip_markers(std::string(line_raw));
    if (!line.empty()) {
      std::optional<Derivation> header_derivation;
      if (parse_header(line, header_derivation)) {
        section = header_derivation;
      } else if (seen.insert(text::fold_key(line)).second) {
        out.push_back({line, section});
      }
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (out.empty()) throw EmptyOutputError("completion contains no queries");
  return out;
}

std::vector<std::string> parse_llm_output(std::string_view raw) {
  std::vector<std::string> out;
  for (auto& q : parse_labeled_llm_output(raw)) out.push_back(std::move(q.text));
  return out;
}

QueryGroup generate_llm(const Shop& shop, const llm::PromptTemplate& tmpl,
                        llm::Gateway& gateway) {
  const auto request = llm::assemble_generation_prompt(shop, tmpl);
  const auto completion = gateway.complete(request);
  QueryGroup group{shop.id, {}};
  for (auto& parsed : parse_labeled_llm_output(completion.text)) {
    add_unique(group, TestQuery{std::move(parsed.text), shop.id,
                                parsed.derivation.value_or(Derivation::kName),
                                ConceptRelation::kUnknown, QuerySource::kLlm});
  }
  return group;
}

// ---------------------------------------------------------------------------
// Template generation.

namespace {

struct NameParts {
  std::string stripped;  // name without parenthetical segments
  std::string branch;    // content of the last parenthetical, if any
};

NameParts split_name(const std::string& name) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 4> kBrackets = {{
      {"(", ")"},
      {"（", "）"},
      {"[", "]"},
      {"【", "】"},
  }};
  NameParts parts;
  std::string rest = name;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [open, close] : kBrackets) {
      const auto o = rest.find(open);
      if (o == std::string::npos) continue;
      const auto c = rest.find(close, o + open.size());
      if (c == std::string::npos) continue;
      parts.branch = text::normalize(rest.substr(o + open.size(), c - o - open.size()));
      rest = rest.substr(0, o) + " " + rest.substr(c + close.size());
      changed = true;
    }
  }
  parts.stripped = text::normalize(rest);
  return parts;
}

}  // namespace

QueryGroup generate_template(const Shop& shop, const TemplateRules& rules) {
  QueryGroup group{shop.id, {}};
  auto add = [&](std::string t, Derivation d, ConceptRelation r) {
    add_unique(group, TestQuery{std::move(t), shop.id, d, r, QuerySource::kTemplate});
  };
  const std::string name = text::normalize(shop.name);
  const std::string type = text::normalize(shop.shop_type);
  const NameParts parts = split_name(name);

  add(name, Derivation::kName, ConceptRelation::kEquivalent);
  add(parts.stripped, Derivation::kName, ConceptRelation::kEquivalent);

  add(type, Derivation::kServiceProduct, ConceptRelation::kIncluding);
  const auto type_tokens = text::tokenize(type);
  if (type_tokens.size() >= 2 && text::length(type_tokens.front()) >= rules.min_token_length) {
    add(type_tokens.front(), Derivation::kServiceProduct, ConceptRelation::kIncluding);
  }

  if (rules.branch_location && !parts.branch.empty()) {
    add(type + " " + parts.branch, Derivation::kLocation, ConceptRelation::kIncluding);
  }
  const std::string city = text::normalize(shop.city);
  if (!city.empty()) add(type + " " + city, Derivation::kLocation, ConceptRelation::kIncluding);

  const auto stripped_tokens = text::tokenize(parts.stripped);
  if (rules.abbreviation && stripped_tokens.size() >= 3) {
    add(stripped_tokens.front() + " " + stripped_tokens.back(), Derivation::kName,
        ConceptRelation::kEquivalent);
  }
  for (const auto& tok : text::tokenize(name)) {
    if (text::length(tok) >= rules.min_token_length) {
      add(tok, Derivation::kName, ConceptRelation::kEquivalent);
    }
  }
  return truncate_group(group, rules.max_group_size);
}

void to_json(nlohmann::json& j, const TestQuery& q) {
  j = nlohmann::json{{"text", q.text},
                     {"target_shop_id", q.target_shop_id},
                     {"derivation", std::string(to_string(q.derivation))},
                     {"concept_relation", std::string(to_string(q.concept_relation))},
                     {"source", std::string(to_string(q.source))}};
}

void from_json(const nlohmann::json& j, TestQuery& q) {
  q.text = j.at("text").get<std::string>();
  q.target_shop_id = j.at("target_shop_id").get<std::string>();
  q.derivation = parse_derivation(j.at("derivation").get<std::string>());
  q.concept_relation = parse_concept_relation(j.value("concept_relation", "unknown"));
  q.source = parse_query_source(j.at("source").get<std::string>());
}

void to_json(nlohmann::json& j, const QueryGroup& g) {
  j = nlohmann::json{{"target_shop_id", g.target_shop_id}, {"queries", g.queries}};
}

void from_json(const nlohmann::json& j, QueryGroup& g) {
  g.target_shop_id = j.at("target_shop_id").get<std::string>();
  g.queries = j.at("queries").get<std::vector<TestQuery>>();
  for (const auto& q : g.queries) {
    if (q.target_shop_id != g.target_shop_id) {
      throw ParseError("query '" + q.text + "' targets a different shop than its group");
    }
  }
}

}  // namespace recallprobe
