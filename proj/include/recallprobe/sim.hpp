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

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recallprobe/catalog.hpp"
#include "recallprobe/generation.hpp"
#include "recallprobe/search.hpp"

// A deterministic mini search engine used as a reference backend. It
// segments queries, treats known landmark phrases as geo constraints,
// filters closed and far-away shops and ranks the rest. Two fault modes can
// be injected to make missed recalls constructible:
//
//   segmentation_main_part  the engine picks the configured segment as the
//                           main intent and recalls every shop whose name
//                           contains it, ignoring the other segments.
//   landmark_misparse       a fragment of a shop's name is read as a
//                           landmark even though it names the shop.
namespace recallprobe::sim {

enum class FaultKind { kSegmentationMainPart, kLandmarkMisparse };

std::string_view to_string(FaultKind k);

struct FaultSpec {
  FaultKind kind = FaultKind::kSegmentationMainPart;
  // Selector: exactly one of shop_id / query_pattern. query_pattern is an
  // ECMAScript regex matched against the whole fold_key() of the query.
  std::string shop_id;
  std::string query_pattern;
  std::string main_part;  // segmentation_main_part
  std::string fragment;   // landmark_misparse
};

struct SimConfig {
  int page_cap = 20;
  double radius_m = 3000.0;
  double token_weight = 1.0;
  double distance_weight = 0.1;
  std::vector<FaultSpec> faults;
  std::map<std::string, GeoPoint> landmarks;
  // Static per-shop score offsets standing in for promotion and other
  // ordering strategies.
  std::map<std::string, double> score_offsets;
  std::uint64_t seed = 0;

  void validate() const;
  SimConfig without_faults() const;
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& c);

class SimIndex {
 public:
  /// Shops in id order; every shop indexed once over its name and type
  /// tokens.
  static SimIndex build(const Catalog& catalog);

  const std::vector<Shop>& shops() const { return shops_; }
  std::size_t size() const { return shops_.size(); }
  const Shop* find(std::string_view id) const;

  /// Indices into shops(), ascending (hence by shop id).
  const std::vector<std::size_t>& postings(const std::string& folded_token) const;
  std::size_t document_frequency(const std::string& folded_token) const;
  /// ln(N / df); 0 for unknown tokens.
  double idf(const std::string& folded_token) const;

  const std::set<std::string>& tokens_of(std::size_t shop) const { return shop_tokens_[shop]; }
  const std::string& name_key(std::size_t shop) const { return name_keys_[shop]; }
  /// True when the phrase occurs as a contiguous run of some shop's name
  /// tokens.
  bool names_phrase(std::span<const std::string> folded_phrase) const;
  bool shop_names_phrase(std::size_t shop, std::span<const std::string> folded_phrase) const;

 private:
  std::vector<Shop> shops_;
  std::map<std::string, std::vector<std::size_t>> postings_;
  std::vector<std::set<std::string>> shop_tokens_;
  std::vector<std::vector<std::string>> name_tokens_;
  std::vector<std::string> name_keys_;
};

SimIndex build_index(const Catalog& catalog);

/// Throws ConfigError when a fault's selector matches nothing in the index
/// or its parameters are unusable.
void check_fault_injection(const SimIndex& index, const SimConfig& config);

struct Segmentation {
  std::vector<std::string> segments;  // as typed (NFC)
  std::vector<std::string> folded;
  std::size_t main_index = 0;
  std::string main_part;
  bool faulted = false;
};

/// Tokenizes the query and picks the main part: the segment with the highest
/// IDF among segments known to the index, leftmost on ties (leftmost
/// segment when none is known). A matching segmentation fault overrides it.
Segmentation segment(std::string_view query, const SimIndex& index, const SimConfig& config);

struct LocationConstraint {
  std::string phrase;
  GeoPoint point;
};

struct LocationResolution {
  std::optional<LocationConstraint> constraint;
  std::vector<std::string> match_tokens;  // folded, landmark phrase removed
  bool faulted = false;
};

/// Looks for the longest suffix, then prefix, of the folded segments that is
/// a landmark while leaving at least one token to match. A phrase that also
/// names an indexed shop is kept as a name, unless a landmark fault for
/// that fragment applies to the query.
LocationResolution resolve_location_phrase(std::string_view query,
                                           std::span<const std::string> folded_segments,
                                           const SimIndex& index, const SimConfig& config);

/// Full pipeline; returns at most min(page_cap, ctx.max_entries()) entries
/// ordered by (score desc, distance asc, id asc).
std::vector<ResultEntry> search(std::string_view query, const SearchContext& ctx,
                                const SimIndex& index, const SimConfig& config);

struct ExpectedFinding {
  std::string shop_id;
  std::string query_text;

  auto operator<=>(const ExpectedFinding&) const = default;
};

/// White-box oracle: a query is an expected finding when it recalls its
/// target without faults, misses it with faults, and some sibling query
/// recalls it with faults. Each group is searched from its target's
/// location with `base` supplying the rest of the context. Ordered by
/// (shop id, query text); ineligible groups are skipped.
std::vector<ExpectedFinding> ground_truth_misses(const Catalog& catalog,
                                                 std::span<const QueryGroup> groups,
                                                 const SimConfig& config,
                                                 const SearchContext& base);

/// In-process backend.
class Simulator : public SearchBackend {
 public:
  /// Throws ConfigError on an invalid config or fault injection.
  Simulator(const Catalog& catalog, SimConfig config);
  BackendResponse search(const SearchRequest& request) override;

  const SimIndex& index() const { return index_; }
  const SimConfig& config() const { return config_; }

 private:
  SimIndex index_;
  SimConfig config_;
};

/// HTTP serving mode: POST /search with the request schema of
/// encode_search_request, answering encode_search_response; GET /health.
class SimServer {
 public:
  explicit SimServer(std::shared_ptr<Simulator> simulator);
  ~SimServer();
  SimServer(const SimServer&) = delete;
  SimServer& operator=(const SimServer&) = delete;

  /// Binds without serving; port 0 picks a free port. Returns false when the
  /// address cannot be bound.
  bool bind(const std::string& host, int port);
  int port() const { return port_; }
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace recallprobe::sim
