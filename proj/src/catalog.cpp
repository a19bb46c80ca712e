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

#include "recallprobe/catalog.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/text.hpp"

namespace recallprobe {

namespace {

constexpr std::size_t kMinuteOfDayEnd = 24 * 60;

// Fields of one input record before validation; a missing optional column is
// nullopt.
struct RawRecord {
  std::optional<std::string> id;
  std::optional<std::string> name;
  std::optional<std::string> type;
  std::optional<std::string> city;
  std::optional<std::string> lon;
  std::optional<std::string> lat;
  std::optional<std::string> hours;
  std::optional<std::string> active;
};

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Accepts "116.3", "116.3E", "40.5N", "-3.2", "3.2W".
double parse_coordinate(std::string_view raw, bool is_longitude, const char* column) {
  std::string s = text::trim(raw);
  if (s.empty()) throw ContractError(std::string("missing ") + column);
  double sign = 1.0;
  const char last = static_cast<char>(std::toupper(static_cast<unsigned char>(s.back())));
  if (std::isalpha(static_cast<unsigned char>(last))) {
    const bool ok = is_longitude ? (last == 'E' || last == 'W') : (last == 'N' || last == 'S');
    if (!ok) throw ContractError(std::string("bad hemisphere suffix in ") + column + ": " + s);
    if (last == 'W' || last == 'S') sign = -1.0;
    s.pop_back();
  }
  auto v = parse_double(text::trim(s));
  if (!v) throw ContractError(std::string("not a number in ") + column + ": " + std::string(raw));
  return sign * *v;
}

bool parse_bool(std::string_view raw) {
  const std::string s = text::fold_key(raw);
  if (s.empty() || s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ContractError("bad active flag: " + std::string(raw));
}

std::string describe(const std::vector<ShopViolation>& vs) {
  std::string out;
  for (auto v : vs) {
    if (!out.empty()) out += ",";
    out += to_string(v);
  }
  return out;
}

// Builds a shop from a raw record; throws ContractError with a row-level
// reason.
Shop build_shop(const RawRecord& r, std::size_t row) {
  Shop shop;
  shop.id = r.id ? text::normalize(*r.id) : std::string{};
  if (shop.id.empty()) shop.id = "row-" + std::to_string(row);
  if (!r.name) throw ContractError("missing name");
  if (!r.type) throw ContractError("missing type");
  if (!r.lon) throw ContractError("missing lon");
  if (!r.lat) throw ContractError("missing lat");
  shop.name = text::normalize(*r.name);
  shop.shop_type = text::normalize(*r.type);
  shop.city = r.city ? text::normalize(*r.city) : std::string{};
  shop.location.lon = parse_coordinate(*r.lon, true, "lon");
  shop.location.lat = parse_coordinate(*r.lat, false, "lat");
  if (r.hours && !text::trim(*r.hours).empty()) {
    try {
      shop.opening_hours = parse_opening_hours(*r.hours);
    } catch (const ParseError& e) {
      throw ContractError(e.what());
    }
  }
  if (r.active) shop.active = parse_bool(*r.active);
  if (auto vs = validate_shop(shop); !vs.empty()) throw ContractError(describe(vs));
  return shop;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

const std::set<std::string, std::less<>> kKnownColumns = {"id",  "name", "type",  "city",
                                                          "lon", "lat",  "hours", "active"};
const std::vector<std::string> kRequiredColumns = {"name", "type", "city", "lon", "lat"};

CatalogParseResult parse_csv(std::string_view bytes, std::string source) {
  auto records = csv::split(bytes);
  if (records.empty()) throw ParseError("CSV catalog has no header");
  const auto& header = records.front();
  std::vector<std::string> columns;
  for (const auto& h : header) {
    std::string col = text::fold_key(h);
    if (!kKnownColumns.contains(col)) throw ParseError("unknown CSV column: " + h);
    if (std::find(columns.begin(), columns.end(), col) != columns.end()) {
      throw ParseError("duplicate CSV column: " + h);
    }
    columns.push_back(col);
  }
  for (const auto& req : kRequiredColumns) {
    if (std::find(columns.begin(), columns.end(), req) == columns.end()) {
      throw ParseError("missing CSV column: " + req);
    }
  }

  CatalogParseResult result;
  result.catalog.source = std::move(source);
  std::set<std::string, std::less<>> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    ++result.rows_in;
    const auto& rec = records[r];
    if (rec.size() != columns.size()) {
      result.rejected.push_back({r, "expected " + std::to_string(columns.size()) +
                                        " fields, got " + std::to_string(rec.size())});
      continue;
    }
    RawRecord raw;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& col = columns[c];
      std::optional<std::string>* slot = col == "id"      ? &raw.id
                                         : col == "name"  ? &raw.name
                                         : col == "type"  ? &raw.type
                                         : col == "city"  ? &raw.city
                                         : col == "lon"   ? &raw.lon
                                         : col == "lat"   ? &raw.lat
                                         : col == "hours" ? &raw.hours
                                                          : &raw.active;
      *slot = rec[c];
    }
    try {
      Shop shop = build_shop(raw, r);
      if (!seen.insert(shop.id).second) throw ContractError("duplicate id: " + shop.id);
      result.catalog.shops.push_back(std::move(shop));
    } catch (const ContractError& e) {
      result.rejected.push_back({r, e.what()});
    }
  }
  return result;
}

std::optional<std::string> json_field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number()) {
    if (it->is_number_float()) return format_double(it->get<double>());
    return it->dump();
  }
  if (it->is_boolean()) return it->get<bool>() ? "true" : "false";
  throw ContractError(std::string("field ") + key + " has unsupported JSON type");
}

CatalogParseResult parse_json(std::string_view bytes, std::string source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON catalog: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("JSON catalog must be an array of objects");
  CatalogParseResult result;
  result.catalog.source = std::move(source);
  std::set<std::string, std::less<>> seen;
  std::size_t row = 0;
  for (const auto& item : doc) {
    ++row;
    ++result.rows_in;
    try {
      if (!item.is_object()) throw ContractError("record is not an object");
      for (const auto& [key, _] : item.items()) {
        if (!kKnownColumns.contains(key)) throw ContractError("unknown field: " + key);
      }
      RawRecord raw{json_field(item, "id"),  json_field(item, "name"), json_field(item, "type"),
                    json_field(item, "city"), json_field(item, "lon"), json_field(item, "lat"),
                    json_field(item, "hours"), json_field(item, "active")};
      Shop shop = build_shop(raw, row);
      if (!seen.insert(shop.id).second) throw ContractError("duplicate id: " + shop.id);
      result.catalog.shops.push_back(std::move(shop));
    } catch (const ContractError& e) {
      result.rejected.push_back({row, e.what()});
    }
  }
  return result;
}

}  // namespace

double haversine_meters(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kEarthRadius = 6371008.8;
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * kRad;
  const double dlon = (b.lon - a.lon) * kRad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

bool Shop::is_open_at(int minute_of_day) const {
  if (opening_hours.empty()) return true;
  return std::any_of(opening_hours.begin(), opening_hours.end(), [&](const OpeningInterval& iv) {
    return minute_of_day >= iv.open_minute && minute_of_day < iv.close_minute;
  });
}

std::string_view to_string(ShopViolation v) {
  switch (v) {
    case ShopViolation::kEmptyId: return "EmptyId";
    case ShopViolation::kEmptyName: return "EmptyName";
    case ShopViolation::kEmptyType: return "EmptyType";
    case ShopViolation::kLongitudeOutOfRange: return "LongitudeOutOfRange";
    case ShopViolation::kLatitudeOutOfRange: return "LatitudeOutOfRange";
    case ShopViolation::kInvertedOpeningInterval: return "InvertedOpeningInterval";
    case ShopViolation::kOpeningTimeOutOfRange: return "OpeningTimeOutOfRange";
  }
  return "Unknown";
}

std::vector<ShopViolation> validate_shop(const Shop& shop) {
  std::vector<ShopViolation> out;
  if (text::normalize(shop.id).empty()) out.push_back(ShopViolation::kEmptyId);
  if (text::normalize(shop.name).empty()) out.push_back(ShopViolation::kEmptyName);
  if (text::normalize(shop.shop_type).empty()) out.push_back(ShopViolation::kEmptyType);
  if (!(shop.location.lon >= -180.0 && shop.location.lon <= 180.0)) {
    out.push_back(ShopViolation::kLongitudeOutOfRange);
  }
  if (!(shop.location.lat >= -90.0 && shop.location.lat <= 90.0)) {
    out.push_back(ShopViolation::kLatitudeOutOfRange);
  }
  for (const auto& iv : shop.opening_hours) {
    const auto in_day = [](int m) { return m >= 0 && m <= static_cast<int>(kMinuteOfDayEnd); };
    if (!in_day(iv.open_minute) || !in_day(iv.close_minute)) {
      out.push_back(ShopViolation::kOpeningTimeOutOfRange);
    } else if (iv.open_minute >= iv.close_minute) {
      out.push_back(ShopViolation::kInvertedOpeningInterval);
    }
  }
  return out;
}

const Shop* Catalog::find(std::string_view id) const {
  for (const auto& s : shops) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

CatalogFormat parse_catalog_format(std::string_view name) {
  const std::string f = text::fold_key(name);
  if (f == "csv") return CatalogFormat::kCsv;
  if (f == "json") return CatalogFormat::kJson;
  throw ConfigError("unknown catalog format: " + std::string(name));
}

CatalogParseResult parse_catalog(std::string_view bytes, CatalogFormat format,
                                 std::string source) {
  if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
  if (!text::is_valid_utf8(bytes)) throw ParseError("catalog is not valid UTF-8");
  return format == CatalogFormat::kCsv ? parse_csv(bytes, std::move(source))
                                       : parse_json(bytes, std::move(source));
}

std::string emit_catalog(const Catalog& catalog, CatalogFormat format) {
  if (format == CatalogFormat::kJson) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : catalog.shops) arr.push_back(s);
    return arr.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "id,name,type,city,lon,lat,hours,active\n";
  for (const auto& s : catalog.shops) {
    out << csv::escape(s.id) << ',' << csv::escape(s.name) << ',' << csv::escape(s.shop_type) << ','
        << csv::escape(s.city) << ',' << format_double(s.location.lon) << ','
        << format_double(s.location.lat) << ','
        << csv::escape(format_opening_hours(s.opening_hours)) << ','
        << (s.active ? "true" : "false") << '\n';
  }
  return out.str();
}

std::optional<int> parse_clock(std::string_view hhmm) {
  const std::string s = text::trim(hhmm);
  const auto colon = s.find(':');
  if (colon == std::string::npos || colon == 0 || s.size() - colon != 3) return std::nullopt;
  int h = 0;
  int m = 0;
  auto r1 = std::from_chars(s.data(), s.data() + colon, h);
  auto r2 = std::from_chars(s.data() + colon + 1, s.data() + s.size(), m);
  if (r1.ec != std::errc() || r1.ptr != s.data() + colon) return std::nullopt;
  if (r2.ec != std::errc() || r2.ptr != s.data() + s.size()) return std::nullopt;
  if (h < 0 || m < 0 || m > 59 || h > 24 || (h == 24 && m != 0)) return std::nullopt;
  return h * 60 + m;
}

std::string format_clock(int minute_of_day) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute_of_day / 60, minute_of_day % 60);
  return buf;
}

std::vector<OpeningInterval> parse_opening_hours(std::string_view spec) {
  std::vector<OpeningInterval> out;
  std::string s = text::trim(spec);
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto semi = s.find(';', start);
    const std::string part =
        text::trim(std::string_view(s).substr(start, semi == std::string::npos ? std::string::npos
                                                                                 : semi - start));
    if (!part.empty()) {
      const auto dash = part.find('-');
      if (dash == std::string::npos) throw ParseError("bad opening interval: " + part);
      auto open = parse_clock(std::string_view(part).substr(0, dash));
      auto close = parse_clock(std::string_view(part).substr(dash + 1));
      if (!open || !close) throw ParseError("bad opening interval: " + part);
      out.push_back({*open, *close});
    }
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

std::string format_opening_hours(const std::vector<OpeningInterval>& hours) {
  std::string out;
  for (const auto& iv : hours) {
    if (!out.empty()) out += ';';
    out += format_clock(iv.open_minute) + "-" + format_clock(iv.close_minute);
  }
  return out;
}

void to_json(nlohmann::json& j, const Shop& shop) {
  j = nlohmann::json{{"id", shop.id},
                     {"name", shop.name},
                     {"type", shop.shop_type},
                     {"city", shop.city},
                     {"lon", shop.location.lon},
                     {"lat", shop.location.lat}};
  if (!shop.opening_hours.empty()) j["hours"] = format_opening_hours(shop.opening_hours);
  j["active"] = shop.active;
}

void from_json(const nlohmann::json& j, Shop& shop) {
  shop.id = j.at("id").get<std::string>();
  shop.name = j.at("name").get<std::string>();
  shop.shop_type = j.at("type").get<std::string>();
  shop.city = j.value("city", std::string{});
  shop.location = {j.at("lon").get<double>(), j.at("lat").get<double>()};
  shop.opening_hours =
      j.contains("hours") ? parse_opening_hours(j.at("hours").get<std::string>())
                          : std::vector<OpeningInterval>{};
  shop.active = j.value("active", true);
}

}  // namespace recallprobe
