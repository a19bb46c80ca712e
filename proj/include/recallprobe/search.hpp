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

#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recallprobe/catalog.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/generation.hpp"

namespace recallprobe {

/// Wall-clock reading without a time zone; only the time of day is used for
/// gating and opening hours.
struct LocalDateTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  /// "YYYY-MM-DDTHH:MM[:SS]" (a space is accepted in place of 'T').
  static LocalDateTime parse(std::string_view s);
  static LocalDateTime now();
  std::string to_string() const;
  int minute_of_day() const { return hour * 60 + minute; }

  bool operator==(const LocalDateTime&) const = default;
};

using LocalClock = std::function<LocalDateTime()>;

/// [start, end) in minutes since midnight.
struct TimeWindow {
  int start_minute = 10 * 60;
  int end_minute = 21 * 60;

  /// "HH:MM-HH:MM"; throws ConfigError unless start < end.
  static TimeWindow parse(std::string_view s);
  std::string to_string() const;
};

struct SearchContext {
  std::string account_id;
  GeoPoint location;
  LocalDateTime timestamp;
  int page_size = 20;
  int page_depth = 1;

  int max_entries() const { return page_size * page_depth; }
  void validate() const;
};

void to_json(nlohmann::json& j, const SearchContext& c);
void from_json(const nlohmann::json& j, SearchContext& c);

enum class GateResult { kOk, kGated };

/// kOk iff the context's local time is inside [start, end).
GateResult gate_time(const SearchContext& ctx, const TimeWindow& window);

struct ResultEntry {
  std::string shop_id;  // empty when the backend exposes no ids
  std::string shop_name;
  double score = 0.0;

  bool operator==(const ResultEntry&) const = default;
};

/// R(X): ordered recall set for one query under one context.
struct SearchResultPage {
  std::vector<ResultEntry> entries;
  std::string query;
  SearchContext context;
  std::string raw_response;
  std::chrono::microseconds latency{0};
};

/// Wire request understood by every backend.
struct SearchRequest {
  std::string query;
  GeoPoint location;
  std::string account_id;
  std::string timestamp;
  int page_size = 20;

  bool operator==(const SearchRequest&) const = default;
};

nlohmann::json encode_search_request(const SearchRequest& r);
SearchRequest decode_search_request(const nlohmann::json& j);

struct BackendResponse {
  std::vector<ResultEntry> entries;
  std::string raw;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  /// Throws BackendError on transport failure or a malformed response.
  virtual BackendResponse search(const SearchRequest& request) = 0;
};

/// Field mapping for an HTTP search backend. An empty id_field means the
/// backend exposes no shop ids.
struct HttpBackendProfile {
  std::string base_url;
  std::string path = "/search";
  std::string results_field = "results";
  std::string id_field = "id";
  std::string name_field = "name";
  std::string score_field = "score";
  std::chrono::milliseconds timeout{10'000};
};

HttpBackendProfile http_profile_from_json(const nlohmann::json& j);

/// Serializes entries with the default profile's field names.
std::string encode_search_response(const std::vector<ResultEntry>& entries);
BackendResponse decode_search_response(std::string_view body, const HttpBackendProfile& profile);

class HttpSearchBackend : public SearchBackend {
 public:
  explicit HttpSearchBackend(HttpBackendProfile profile);
  BackendResponse search(const SearchRequest& request) override;

 private:
  HttpBackendProfile profile_;
};

/// Append-only record of (query, context, response digest).
class AuditLog {
 public:
  AuditLog() = default;
  AuditLog(const AuditLog& other) : entries_(other.entries()) {}
  AuditLog& operator=(const AuditLog& other) {
    if (this != &other) {
      auto copy = other.entries();
      std::lock_guard lock(mu_);
      entries_ = std::move(copy);
    }
    return *this;
  }

  void append(const SearchRequest& request, std::string_view status, std::string_view body);
  std::vector<nlohmann::json> entries() const;
  /// Appends another log's entries, re-stamping their sequence numbers.
  void merge(const AuditLog& other);
  std::string to_jsonl() const;

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> entries_;
};

enum class ExecStatus { kExecuted, kUnexecuted };

struct Execution {
  ExecStatus status = ExecStatus::kUnexecuted;
  SearchResultPage page;
  std::string error;
};

SearchRequest make_request(const TestQuery& query, const SearchContext& ctx);

/// Runs one query. Transport or decoding failures yield kUnexecuted with the
/// error text; the page holds at most ctx.max_entries() entries.
Execution execute(const TestQuery& query, const SearchContext& ctx, SearchBackend& backend,
                  AuditLog* audit = nullptr);

enum class MatchMode { kId, kNormalizedName };

std::string_view to_string(MatchMode m);

struct RecallCheck {
  bool recalled = false;
  MatchMode mode = MatchMode::kId;
};

/// y = (target in R(X)). Matches by shop id when the page carries ids,
/// otherwise by fold_key of the name.
RecallCheck recalled(const SearchResultPage& page, const Shop& target);

}  // namespace recallprobe
