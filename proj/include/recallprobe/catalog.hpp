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

namespace recallprobe {

/// Degrees. Stored canonically as (longitude, latitude).
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

/// Great-circle distance in meters.
double haversine_meters(const GeoPoint& a, const GeoPoint& b);

/// Local-time interval in minutes since midnight, [open, close). close may be
/// 1440 ("24:00").
struct OpeningInterval {
  int open_minute = 0;
  int close_minute = 0;

  bool operator==(const OpeningInterval&) const = default;
};

struct Shop {
  std::string id;
  std::string name;
  std::string shop_type;
  std::string city;
  GeoPoint location;
  // Empty means always open.
  std::vector<OpeningInterval> opening_hours;
  bool active = true;

  bool is_open_at(int minute_of_day) const;

  bool operator==(const Shop&) const = default;
};

enum class ShopViolation {
  kEmptyId,
  kEmptyName,
  kEmptyType,
  kLongitudeOutOfRange,
  kLatitudeOutOfRange,
  kInvertedOpeningInterval,
  kOpeningTimeOutOfRange,
};

std::string_view to_string(ShopViolation v);

/// Every invariant violation of a single shop; empty means valid.
std::vector<ShopViolation> validate_shop(const Shop& shop);

struct Catalog {
  std::vector<Shop> shops;
  std::string source;

  const Shop* find(std::string_view id) const;
};

enum class CatalogFormat { kCsv, kJson };

CatalogFormat parse_catalog_format(std::string_view name);

struct RowError {
  std::size_t row = 0;  // 1-based record number
  std::string reason;
};

struct CatalogParseResult {
  Catalog catalog;
  std::vector<RowError> rejected;
  std::size_t rows_in = 0;
};

/// Parses catalog bytes. Throws ParseError on undecodable input (invalid
/// UTF-8, broken JSON, CSV header not matching the schema). Per-row problems
/// are collected in `rejected` and parsing continues, so
/// rows_in == shops.size() + rejected.size().
CatalogParseResult parse_catalog(std::string_view bytes, CatalogFormat format,
                                 std::string source = {});

std::string emit_catalog(const Catalog& catalog, CatalogFormat format);

/// "HH:MM-HH:MM[;...]"
std::vector<OpeningInterval> parse_opening_hours(std::string_view spec);
std::string format_opening_hours(const std::vector<OpeningInterval>& hours);

/// Parses "HH:MM" into minutes since midnight; "24:00" is accepted.
std::optional<int> parse_clock(std::string_view hhmm);
std::string format_clock(int minute_of_day);

void to_json(nlohmann::json& j, const Shop& shop);
void from_json(const nlohmann::json& j, Shop& shop);

}  // namespace recallprobe
