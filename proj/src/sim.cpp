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

#include "recallprobe/sim.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "httplib.h"
#include "recallprobe/error.hpp"
#include "recallprobe/text.hpp"

namespace recallprobe::sim {

std::string_view to_string(FaultKind k) {
  return k == FaultKind::kSegmentationMainPart ? "segmentation_main_part" : "landmark_misparse";
}

void SimConfig::validate() const {
  if (page_cap < 1) throw ConfigError("page_cap must be >= 1");
  if (!(radius_m > 0)) throw ConfigError("radius_m must be > 0");
  if (token_weight < 0 || distance_weight < 0) throw ConfigError("weights must be >= 0");
  for (const auto& f : faults) {
    if (f.shop_id.empty() == f.query_pattern.empty()) {
      throw ConfigError("fault needs exactly one of shop_id / query_pattern");
    }
    if (f.kind == FaultKind::kSegmentationMainPart && text::trim(f.main_part).empty()) {
      throw ConfigError("segmentation fault needs main_part");
    }
    if (f.kind == FaultKind::kLandmarkMisparse && text::trim(f.fragment).empty()) {
      throw ConfigError("landmark fault needs fragment");
    }
  }
}

SimConfig SimConfig::without_faults() const {
  SimConfig c = *this;
  c.faults.clear();
  return c;
}

namespace {

GeoPoint point_from_json(const nlohmann::json& j) {
  if (j.is_array()) return {j.at(0).get<double>(), j.at(1).get<double>()};
  return {j.at("lon").get<double>(), j.at("lat").get<double>()};
}

FaultKind parse_fault_kind(std::string_view s) {
  if (s == "segmentation_main_part") return FaultKind::kSegmentationMainPart;
  if (s == "landmark_misparse") return FaultKind::kLandmarkMisparse;
  throw ConfigError("unknown fault kind: " + std::string(s));
}

}  // namespace

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  try {
    c.page_cap = j.value("page_cap", c.page_cap);
    c.radius_m = j.value("radius_m", c.radius_m);
    c.token_weight = j.value("token_weight", c.token_weight);
    c.distance_weight = j.value("distance_weight", c.distance_weight);
    c.seed = j.value("seed", c.seed);
    if (j.contains("landmarks")) {
      for (const auto& [name, p] : j.at("landmarks").items()) c.landmarks[name] = point_from_json(p);
    }
    if (j.contains("score_offsets")) {
      c.score_offsets = j.at("score_offsets").get<std::map<std::string, double>>();
    }
    for (const auto& fj : j.value("faults", nlohmann::json::array())) {
      FaultSpec f;
      f.kind = parse_fault_kind(fj.at("kind").get<std::string>());
      const auto& scope = fj.at("scope");
      f.shop_id = scope.value("shop_id", std::string{});
      f.query_pattern = scope.value("query_pattern", std::string{});
      const auto params = fj.value("params", nlohmann::json::object());
      f.main_part = params.value("main_part", std::string{});
      f.fragment = params.value("fragment", std::string{});
      c.faults.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad simulator config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json sim_config_to_json(const SimConfig& c) {
  nlohmann::json landmarks = nlohmann::json::object();
  for (const auto& [name, p] : c.landmarks) landmarks[name] = {{"lon", p.lon}, {"lat", p.lat}};
  nlohmann::json faults = nlohmann::json::array();
  for (const auto& f : c.faults) {
    nlohmann::json scope = f.shop_id.empty() ? nlohmann::json{{"query_pattern", f.query_pattern}}
                                             : nlohmann::json{{"shop_id", f.shop_id}};
    nlohmann::json params = f.kind == FaultKind::kSegmentationMainPart
                                ? nlohmann::json{{"main_part", f.main_part}}
                                : nlohmann::json{{"fragment", f.fragment}};
    faults.push_back({{"kind", std::string(to_string(f.kind))},
                      {"scope", std::move(scope)},
                      {"params", std::move(params)}});
  }
  return {{"page_cap", c.page_cap},
          {"radius_m", c.radius_m},
          {"token_weight", c.token_weight},
          {"distance_weight", c.distance_weight},
          {"seed", c.seed},
          {"landmarks", std::move(landmarks)},
          {"score_offsets", c.score_offsets},
          {"faults", std::move(faults)}};
}

// ---------------------------------------------------------------------------

SimIndex SimIndex::build(const Catalog& catalog) {
  SimIndex idx;
  idx.shops_ = catalog.shops;
  std::sort(idx.shops_.begin(), idx.shops_.end(),
            [](const Shop& a, const Shop& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < idx.shops_.size(); ++i) {
    if (idx.shops_[i].id == idx.shops_[i - 1].id) {
      throw ContractError("duplicate shop id in index: " + idx.shops_[i].id);
    }
  }
  for (std::size_t i = 0; i < idx.shops_.size(); ++i) {
    const Shop& s = idx.shops_[i];
    std::set<std::string> tokens;
    auto name_tokens = text::folded_tokens(s.name);
    tokens.insert(name_tokens.begin(), name_tokens.end());
    for (auto& t : text::folded_tokens(s.shop_type)) tokens.insert(std::move(t));
    for (const auto& t : tokens) idx.postings_[t].push_back(i);
    idx.shop_tokens_.push_back(std::move(tokens));
    idx.name_tokens_.push_back(std::move(name_tokens));
    idx.name_keys_.push_back(text::fold_key(s.name));
  }
  return idx;
}

SimIndex build_index(const Catalog& catalog) { return SimIndex::build(catalog); }

const Shop* SimIndex::find(std::string_view id) const {
  auto it = std::lower_bound(shops_.begin(), shops_.end(), id,
                             [](const Shop& s, std::string_view v) { return s.id < v; });
  return (it != shops_.end() && it->id == id) ? &*it : nullptr;
}

const std::vector<std::size_t>& SimIndex::postings(const std::string& folded_token) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = postings_.find(folded_token);
  return it == postings_.end() ? kEmpty : it->second;
}

std::size_t SimIndex::document_frequency(const std::string& folded_token) const {
  return postings(folded_token).size();
}

double SimIndex::idf(const std::string& folded_token) const {
  const auto df = document_frequency(folded_token);
  if (df == 0) return 0.0;
  return std::log(static_cast<double>(shops_.size()) / static_cast<double>(df));
}

bool SimIndex::shop_names_phrase(std::size_t shop,
                                 std::span<const std::string> folded_phrase) const {
  const auto& toks = name_tokens_[shop];
  if (folded_phrase.empty() || folded_phrase.size() > toks.size()) return false;
  return std::search(toks.begin(), toks.end(), folded_phrase.begin(), folded_phrase.end()) !=
         toks.end();
}

bool SimIndex::names_phrase(std::span<const std::string> folded_phrase) const {
  if (folded_phrase.empty()) return false;
  for (std::size_t shop : postings(folded_phrase.front())) {
    if (shop_names_phrase(shop, folded_phrase)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------

namespace {

bool pattern_matches(const std::string& pattern, const std::string& query_key) {
  try {
    return std::regex_match(query_key, std::regex(pattern, std::regex::ECMAScript | std::regex::icase));
  } catch (const std::regex_error&) {
    return false;
  }
}

// A shop_id selector matches queries made only of that shop's tokens.
bool selector_matches(const FaultSpec& f, const std::string& query_key,
                      std::span<const std::string> folded, const SimIndex& index) {
  if (!f.query_pattern.empty()) return pattern_matches(f.query_pattern, query_key);
  const Shop* shop = index.find(f.shop_id);
  if (shop == nullptr) return false;
  const auto& toks = index.tokens_of(static_cast<std::size_t>(shop - index.shops().data()));
  return std::all_of(folded.begin(), folded.end(),
                     [&](const std::string& t) { return toks.contains(t); });
}

bool segmentation_fault_applies(const FaultSpec& f, const std::string& query_key,
                                std::span<const std::string> folded, const SimIndex& index) {
  if (f.kind != FaultKind::kSegmentationMainPart || folded.size() < 2) return false;
  const std::string main = text::fold_key(f.main_part);
  if (std::find(folded.begin(), folded.end(), main) == folded.end()) return false;
  return selector_matches(f, query_key, folded, index);
}

bool landmark_fault_applies(const FaultSpec& f, const std::string& query_key,
                            std::span<const std::string> folded, const std::string& phrase,
                            const SimIndex& index) {
  if (f.kind != FaultKind::kLandmarkMisparse) return false;
  if (text::fold_key(f.fragment) != phrase) return false;
  return selector_matches(f, query_key, folded, index);
}

std::size_t pick_main(std::span<const std::string> folded, const SimIndex& index) {
  std::size_t best = 0;
  double best_idf = -1.0;
  for (std::size_t i = 0; i < folded.size(); ++i) {
    if (index.document_frequency(folded[i]) == 0) continue;
    const double v = index.idf(folded[i]);
    if (v > best_idf) {
      best_idf = v;
      best = i;
    }
  }
  return best;
}

std::optional<GeoPoint> landmark_point(const SimConfig& config, const std::string& folded_phrase) {
  for (const auto& [name, p] : config.landmarks) {
    if (text::fold_key(name) == folded_phrase) return p;
  }
  return std::nullopt;
}

}  // namespace

void check_fault_injection(const SimIndex& index, const SimConfig& config) {
  config.validate();
  for (const auto& f : config.faults) {
    const std::string label = std::string(to_string(f.kind));
    if (!f.query_pattern.empty()) {
      try {
        std::regex re(f.query_pattern);
      } catch (const std::regex_error& e) {
        throw ConfigError(label + " fault has an invalid query_pattern: " + e.what());
      }
    }
    const Shop* scoped = nullptr;
    if (!f.shop_id.empty()) {
      scoped = index.find(f.shop_id);
      if (scoped == nullptr) throw ConfigError(label + " fault targets unknown shop " + f.shop_id);
    }
    if (f.kind == FaultKind::kSegmentationMainPart) {
      const std::string main = text::fold_key(f.main_part);
      bool hit = false;
      for (std::size_t i = 0; i < index.size() && !hit; ++i) {
        if (scoped != nullptr && &index.shops()[i] != scoped) continue;
        hit = index.name_key(i).find(main) != std::string::npos;
      }
      if (!hit) throw ConfigError(label + " fault main_part '" + f.main_part + "' matches no shop");
    } else {
      const std::string frag = text::fold_key(f.fragment);
      if (!landmark_point(config, frag)) {
        throw ConfigError(label + " fault fragment '" + f.fragment + "' is not a landmark");
      }
      const auto phrase = text::folded_tokens(f.fragment);
      bool hit = false;
      for (std::size_t i = 0; i < index.size() && !hit; ++i) {
        if (scoped != nullptr && &index.shops()[i] != scoped) continue;
        hit = index.shop_names_phrase(i, phrase);
      }
      if (!hit) throw ConfigError(label + " fault fragment '" + f.fragment + "' names no shop");
    }
  }
}

Segmentation segment(std::string_view query, const SimIndex& index, const SimConfig& config) {
  Segmentation seg;
  seg.segments = text::tokenize(query);
  for (const auto& s : seg.segments) seg.folded.push_back(text::fold_key(s));
  if (seg.segments.empty()) return seg;
  seg.main_index = pick_main(seg.folded, index);
  const std::string query_key = text::fold_key(query);
  for (const auto& f : config.faults) {
    if (!segmentation_fault_applies(f, query_key, seg.folded, index)) continue;
    const std::string main = text::fold_key(f.main_part);
    seg.main_index = static_cast<std::size_t>(
        std::find(seg.folded.begin(), seg.folded.end(), main) - seg.folded.begin());
    seg.faulted = true;
    break;
  }
  seg.main_part = seg.segments[seg.main_index];
  return seg;
}

LocationResolution resolve_location_phrase(std::string_view query,
                                           std::span<const std::string> folded_segments,
                                           const SimIndex& index, const SimConfig& config) {
  LocationResolution res;
  res.match_tokens.assign(folded_segments.begin(), folded_segments.end());
  const std::size_t n = folded_segments.size();
  if (n < 2 || config.landmarks.empty()) return res;
  const std::string query_key = text::fold_key(query);
  for (std::size_t k = n - 1; k >= 1; --k) {
    for (bool suffix : {true, false}) {
      const auto phrase_tokens =
          suffix ? folded_segments.subspan(n - k, k) : folded_segments.subspan(0, k);
      const std::string phrase =
          text::join(std::vector<std::string>(phrase_tokens.begin(), phrase_tokens.end()), " ");
      const auto point = landmark_point(config, phrase);
      if (!point) continue;
      const bool faulted = std::any_of(config.faults.begin(), config.faults.end(), [&](const auto& f) {
        return landmark_fault_applies(f, query_key, folded_segments, phrase, index);
      });
      if (!faulted && index.names_phrase(phrase_tokens)) continue;
      res.constraint = LocationConstraint{phrase, *point};
      res.faulted = faulted;
      const auto rest = suffix ? folded_segments.subspan(0, n - k) : folded_segments.subspan(k);
      res.match_tokens.assign(rest.begin(), rest.end());
      return res;
    }
  }
  return res;
}

std::vector<ResultEntry> search(std::string_view query, const SearchContext& ctx,
                                const SimIndex& index, const SimConfig& config) {
  const std::string normalized = text::normalize(query);
  const Segmentation seg = segment(normalized, index, config);
  if (seg.segments.empty()) return {};
  const LocationResolution loc = resolve_location_phrase(normalized, seg.folded, index, config);

  // Distinct match tokens in query order.
  std::vector<std::string> tokens;
  for (const auto& t : loc.match_tokens) {
    if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
  }
  const std::string& seg_main = seg.folded[seg.main_index];
  const bool main_kept = std::find(tokens.begin(), tokens.end(), seg_main) != tokens.end();
  const bool main_part_only = seg.faulted && main_kept;
  const std::string main = main_kept ? seg_main : tokens[pick_main(tokens, index)];

  std::vector<std::size_t> candidates;
  if (main_part_only) {
    for (std::size_t i = 0; i < index.size(); ++i) {
      if (index.name_key(i).find(main) != std::string::npos) candidates.push_back(i);
    }
  } else {
    for (const auto& t : tokens) {
      const auto& p = index.postings(t);
      candidates.insert(candidates.end(), p.begin(), p.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  }

  double weight_total = 0.0;
  for (const auto& t : tokens) weight_total += (t == main) ? 2.0 : 1.0;

  const GeoPoint origin = loc.constraint ? loc.constraint->point : ctx.location;
  const int minute = ctx.timestamp.minute_of_day();

  struct Scored {
    std::size_t shop;
    double score;
    double distance;
  };
  std::vector<Scored> scored;
  for (std::size_t i : candidates) {
    const Shop& s = index.shops()[i];
    if (!s.active || !s.is_open_at(minute)) continue;
    const double d = haversine_meters(origin, s.location);
    if (d > config.radius_m) continue;
    double fraction = 1.0;
    if (!main_part_only) {
      double matched = 0.0;
      for (const auto& t : tokens) {
        if (index.tokens_of(i).contains(t)) matched += (t == main) ? 2.0 : 1.0;
      }
      fraction = matched / weight_total;
    }
    double offset = 0.0;
    if (auto it = config.score_offsets.find(s.id); it != config.score_offsets.end()) {
      offset = it->second;
    }
    const double score =
        config.token_weight * fraction + offset - config.distance_weight * (d / config.radius_m);
    scored.push_back({i, score, d});
  }
  std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.distance != b.distance) return a.distance < b.distance;
    return index.shops()[a.shop].id < index.shops()[b.shop].id;
  });
  const auto cap = static_cast<std::size_t>(std::min(config.page_cap, ctx.max_entries()));
  if (scored.size() > cap) scored.resize(cap);

  std::vector<ResultEntry> page;
  page.reserve(scored.size());
  for (const auto& s : scored) {
    const Shop& shop = index.shops()[s.shop];
    page.push_back({shop.id, shop.name, s.score});
  }
  return page;
}

std::vector<ExpectedFinding> ground_truth_misses(const Catalog& catalog,
                                                 std::span<const QueryGroup> groups,
                                                 const SimConfig& config,
                                                 const SearchContext& base) {
  const SimIndex index = SimIndex::build(catalog);
  const SimConfig clean = config.without_faults();
  std::vector<ExpectedFinding> out;
  auto hit = [](const std::vector<ResultEntry>& page, const std::string& id) {
    return std::any_of(page.begin(), page.end(),
                       [&](const ResultEntry& e) { return e.shop_id == id; });
  };
  for (const auto& g : groups) {
    if (!g.eligible()) continue;
    const Shop* target = index.find(g.target_shop_id);
    if (target == nullptr) continue;
    SearchContext ctx = base;
    ctx.location = target->location;
    std::vector<bool> clean_hit;
    std::vector<bool> faulted_hit;
    for (const auto& q : g.queries) {
      clean_hit.push_back(hit(search(q.text, ctx, index, clean), target->id));
      faulted_hit.push_back(hit(search(q.text, ctx, index, config), target->id));
    }
    for (std::size_t i = 0; i < g.queries.size(); ++i) {
      if (!clean_hit[i] || faulted_hit[i]) continue;
      bool sibling = false;
      for (std::size_t j = 0; j < g.queries.size(); ++j) {
        if (j != i && faulted_hit[j]) sibling = true;
      }
      if (sibling) out.push_back({g.target_shop_id, g.queries[i].text});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Simulator::Simulator(const Catalog& catalog, SimConfig config)
    : index_(SimIndex::build(catalog)), config_(std::move(config)) {
  check_fault_injection(index_, config_);
}

BackendResponse Simulator::search(const SearchRequest& request) {
  SearchContext ctx;
  ctx.account_id = request.account_id;
  ctx.location = request.location;
  try {
    ctx.timestamp = LocalDateTime::parse(request.timestamp);
  } catch (const ConfigError& e) {
    throw BackendError(e.what());
  }
  ctx.page_size = std::max(1, request.page_size);
  ctx.page_depth = 1;
  BackendResponse res;
  res.entries = sim::search(request.query, ctx, index_, config_);
  res.raw = encode_search_response(res.entries);
  return res;
}

struct SimServer::Impl {
  std::shared_ptr<Simulator> simulator;
  httplib::Server server;
};

SimServer::SimServer(std::shared_ptr<Simulator> simulator) : impl_(std::make_unique<Impl>()) {
  impl_->simulator = std::move(simulator);
  auto* sim = impl_->simulator.get();
  impl_->server.Post("/search", [sim](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto request = decode_search_request(nlohmann::json::parse(req.body));
      res.set_content(sim->search(request).raw, "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
  impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
}

SimServer::~SimServer() { stop(); }

bool SimServer::bind(const std::string& host, int port) {
  if (port < 0 || port > 65535) return false;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

void SimServer::listen() { impl_->server.listen_after_bind(); }

void SimServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace recallprobe::sim
