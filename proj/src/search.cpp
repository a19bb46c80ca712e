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

#include "recallprobe/search.hpp"

#include <charconv>
#include <ctime>

#include "httplib.h"
#include "recallprobe/digest.hpp"
#include "recallprobe/text.hpp"

namespace recallprobe {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc() && ptr == s.data() + pos + len;
}

}  // namespace

LocalDateTime LocalDateTime::parse(std::string_view s) {
  LocalDateTime t;
  const bool ok = (s.size() == 16 || s.size() == 19) && read_int(s, 0, 4, t.year) &&
                  s[4] == '-' && read_int(s, 5, 2, t.month) && s[7] == '-' &&
                  read_int(s, 8, 2, t.day) && (s[10] == 'T' || s[10] == ' ') &&
                  read_int(s, 11, 2, t.hour) && s[13] == ':' && read_int(s, 14, 2, t.minute) &&
                  (s.size() == 16 || (s[16] == ':' && read_int(s, 17, 2, t.second)));
  if (!ok || t.month < 1 || t.month > 12 || t.day < 1 || t.day > 31 || t.hour > 23 ||
      t.minute > 59 || t.second > 60) {
    throw ConfigError("bad local timestamp: " + std::string(s));
  }
  return t;
}

LocalDateTime LocalDateTime::now() {
  const std::time_t tt = std::time(nullptr);
  std::tm tm{};
  localtime_r(&tt, &tm);
  return {tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec};
}

std::string LocalDateTime::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", year, month, day, hour, minute,
                second);
  return buf;
}

TimeWindow TimeWindow::parse(std::string_view s) {
  const auto dash = s.find('-');
  if (dash == std::string_view::npos) throw ConfigError("bad time window: " + std::string(s));
  auto start = parse_clock(s.substr(0, dash));
  auto end = parse_clock(s.substr(dash + 1));
  if (!start || !end || *start >= *end) {
    throw ConfigError("time window must be HH:MM-HH:MM with start < end: " + std::string(s));
  }
  return {*start, *end};
}

std::string TimeWindow::to_string() const {
  return format_clock(start_minute) + "-" + format_clock(end_minute);
}

void SearchContext::validate() const {
  if (account_id.empty()) throw ConfigError("search context needs an account id");
  if (page_size <= 0 || page_depth <= 0) throw ConfigError("page size and depth must be positive");
}

void to_json(nlohmann::json& j, const SearchContext& c) {
  j = nlohmann::json{{"account_id", c.account_id},
                     {"lon", c.location.lon},
                     {"lat", c.location.lat},
                     {"timestamp", c.timestamp.to_string()},
                     {"page_size", c.page_size},
                     {"page_depth", c.page_depth}};
}

void from_json(const nlohmann::json& j, SearchContext& c) {
  c.account_id = j.at("account_id").get<std::string>();
  c.location = {j.at("lon").get<double>(), j.at("lat").get<double>()};
  c.timestamp = LocalDateTime::parse(j.at("timestamp").get<std::string>());
  c.page_size = j.value("page_size", 20);
  c.page_depth = j.value("page_depth", 1);
}

GateResult gate_time(const SearchContext& ctx, const TimeWindow& window) {
  const int m = ctx.timestamp.minute_of_day();
  return (m >= window.start_minute && m < window.end_minute) ? GateResult::kOk
                                                             : GateResult::kGated;
}

nlohmann::json encode_search_request(const SearchRequest& r) {
  return {{"query", r.query},         {"lon", r.location.lon},
          {"lat", r.location.lat},    {"account_id", r.account_id},
          {"timestamp", r.timestamp}, {"page_size", r.page_size}};
}

SearchRequest decode_search_request(const nlohmann::json& j) {
  SearchRequest r;
  r.query = j.at("query").get<std::string>();
  r.location = {j.at("lon").get<double>(), j.at("lat").get<double>()};
  r.account_id = j.value("account_id", std::string{});
  r.timestamp = j.at("timestamp").get<std::string>();
  r.page_size = j.value("page_size", 20);
  return r;
}

HttpBackendProfile http_profile_from_json(const nlohmann::json& j) {
  HttpBackendProfile p;
  p.base_url = j.at("base_url").get<std::string>();
  p.path = j.value("path", p.path);
  p.results_field = j.value("results_field", p.results_field);
  p.id_field = j.value("id_field", p.id_field);
  p.name_field = j.value("name_field", p.name_field);
  p.score_field = j.value("score_field", p.score_field);
  p.timeout = std::chrono::milliseconds(j.value("timeout_ms", 10'000));
  return p;
}

std::string encode_search_response(const std::vector<ResultEntry>& entries) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& e : entries) {
    results.push_back({{"id", e.shop_id}, {"name", e.shop_name}, {"score", e.score}});
  }
  return nlohmann::json{{"results", std::move(results)}}.dump();
}

BackendResponse decode_search_response(std::string_view body, const HttpBackendProfile& profile) {
  BackendResponse out;
  out.raw = std::string(body);
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& results = j.at(profile.results_field);
    if (!results.is_array()) throw BackendError("results field is not an array");
    for (const auto& item : results) {
      ResultEntry e;
      if (!profile.id_field.empty()) e.shop_id = item.at(profile.id_field).get<std::string>();
      e.shop_name = item.value(profile.name_field, std::string{});
      if (!profile.score_field.empty() && item.contains(profile.score_field)) {
        e.score = item.at(profile.score_field).get<double>();
      }
      out.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed search response: ") + e.what());
  }
  return out;
}

HttpSearchBackend::HttpSearchBackend(HttpBackendProfile profile) : profile_(std::move(profile)) {
  if (profile_.base_url.empty()) throw ConfigError("HTTP search backend needs a base_url");
}

BackendResponse HttpSearchBackend::search(const SearchRequest& request) {
  httplib::Client client(profile_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(profile_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(profile_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  auto res = client.Post(profile_.path, encode_search_request(request).dump(), "application/json");
  if (!res) throw BackendError("search transport error: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("search backend returned HTTP " + std::to_string(res->status));
  }
  return decode_search_response(res->body, profile_);
}

void AuditLog::append(const SearchRequest& request, std::string_view status,
                      std::string_view body) {
  std::lock_guard lock(mu_);
  entries_.push_back({{"seq", entries_.size()},
                      {"request", encode_search_request(request)},
                      {"status", std::string(status)},
                      {"response_sha256", sha256_hex(body)}});
}

std::vector<nlohmann::json> AuditLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

void AuditLog::merge(const AuditLog& other) {
  auto incoming = other.entries();
  std::lock_guard lock(mu_);
  for (auto& e : incoming) {
    e["seq"] = entries_.size();
    entries_.push_back(std::move(e));
  }
}

std::string AuditLog::to_jsonl() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& e : entries_) out += e.dump() + "\n";
  return out;
}

SearchRequest make_request(const TestQuery& query, const SearchContext& ctx) {
  return {query.text, ctx.location, ctx.account_id, ctx.timestamp.to_string(), ctx.max_entries()};
}

Execution execute(const TestQuery& query, const SearchContext& ctx, SearchBackend& backend,
                  AuditLog* audit) {
  Execution exec;
  exec.page.query = query.text;
  exec.page.context = ctx;
  const SearchRequest request = make_request(query, ctx);
  const auto start = std::chrono::steady_clock::now();
  try {
    BackendResponse response = backend.search(request);
    exec.page.latency = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    if (response.entries.size() > static_cast<std::size_t>(ctx.max_entries())) {
      response.entries.resize(static_cast<std::size_t>(ctx.max_entries()));
    }
    exec.page.entries = std::move(response.entries);
    exec.page.raw_response = std::move(response.raw);
    exec.status = ExecStatus::kExecuted;
    if (audit) audit->append(request, "executed", exec.page.raw_response);
  } catch (const BackendError& e) {
    exec.status = ExecStatus::kUnexecuted;
    exec.error = e.what();
    if (audit) audit->append(request, "unexecuted", exec.error);
  }
  return exec;
}

std::string_view to_string(MatchMode m) { return m == MatchMode::kId ? "id" : "normalized_name"; }

RecallCheck recalled(const SearchResultPage& page, const Shop& target) {
  const bool has_ids = std::any_of(page.entries.begin(), page.entries.end(),
                                   [](const ResultEntry& e) { return !e.shop_id.empty(); });
  if (has_ids) {
    const bool hit = std::any_of(page.entries.begin(), page.entries.end(),
                                 [&](const ResultEntry& e) { return e.shop_id == target.id; });
    return {hit, MatchMode::kId};
  }
  const std::string key = text::fold_key(target.name);
  const bool hit = std::any_of(page.entries.begin(), page.entries.end(), [&](const ResultEntry& e) {
    return text::fold_key(e.shop_name) == key;
  });
  return {hit, MatchMode::kNormalizedName};
}

}  // namespace recallprobe
