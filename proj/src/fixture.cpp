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

#include "recallprobe/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "recallprobe/pipeline.hpp"

namespace recallprobe::fixture {
namespace {

using nlohmann::json;

constexpr double kMetersPerDegLat = 111'195.0;

GeoPoint offset_m(GeoPoint p, double east_m, double north_m) {
  const double rad = p.lat * 3.14159265358979323846 / 180.0;
  p.lon += east_m / (kMetersPerDegLat * std::cos(rad));
  p.lat += north_m / kMetersPerDegLat;
  return p;
}

json run_config(const SeededFixture& fx, const std::string& run_id,
                const std::string& sim_config, const json& backend_override) {
  json backend = backend_override.is_null() ? json{{"kind", "sim"}, {"sim_config", sim_config}}
                                            : backend_override;
  return {{"run_id", run_id},
          {"seed", fx.config.seed},
          {"out_dir", "out/" + run_id},
          {"catalog", {{"path", "catalog.csv"}, {"format", "csv"}}},
          {"generator", {{"kind", "template"}, {"max_group_size", 6}}},
          {"validation", {{"kind", "rule"}, {"max_query_length", 64}}},
          {"backend", backend},
          {"context",
           {{"account_id", fx.context.account_id},
            {"page_size", fx.context.page_size},
            {"page_depth", fx.context.page_depth},
            {"window", fx.window.to_string()},
            {"timestamp", fx.context.timestamp.to_string()}}},
          {"workers", 1},
          {"partial_failure_threshold", 0.0}};
}

std::string shop_id(int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "shop-%03d", n);
  return buf;
}

Shop make_shop(int n, std::string name, std::string type, std::string city, GeoPoint at,
               std::string_view hours = "") {
  Shop s;
  s.id = shop_id(n);
  s.name = std::move(name);
  s.shop_type = std::move(type);
  s.city = std::move(city);
  s.location = at;
  s.opening_hours = parse_opening_hours(hours);
  return s;
}

constexpr std::array kAdjectives = {"Golden", "Lotus",  "Jade",   "Maple",  "Riverside",
                                    "Cloud",  "Willow", "Amber",  "Harbor", "Pine",
                                    "Silver", "Orchid", "Bamboo", "Lantern", "Crimson"};
constexpr std::array kNouns = {"Corner", "Garden", "Bridge", "Court", "Lane",
                               "Terrace", "Valley", "Pavilion", "Square", "Gate"};
constexpr std::array kTypes = {"Cafe",     "Noodle House", "Bookstore", "Florist",
                               "Pharmacy", "Tea House",    "Hotpot",    "Dumpling Restaurant"};
constexpr std::array kHours = {"", "09:00-22:00", "10:00-15:00;17:00-23:00", "07:30-20:00"};

}  // namespace

SeededFixture make_seeded_fixture(std::uint64_t seed) {
  SeededFixture fx;
  auto& shops = fx.catalog.shops;
  fx.catalog.source = "seeded-fixture";
  int n = 1;

  // Segmentation case, Beijing.
  const GeoPoint beijing{116.4000, 39.9000};
  fx.segmentation_target_id = shop_id(n);
  shops.push_back(make_shop(n++, "Freshside Healthy SPA", "SPA", "Beijing", beijing));
  const std::array<std::pair<const char*, const char*>, 6> promoted = {{
      {"Freshsidemart Laundry", "Laundry"},
      {"Freshsidery Massage", "Massage"},
      {"Freshsides Nails", "Nails"},
      {"Freshsideplus Fitness", "Fitness"},
      {"Freshsidea Pastry", "Pastry"},
      {"Freshsideway Optician", "Optician"},
  }};
  for (std::size_t i = 0; i < promoted.size(); ++i) {
    const double r = 100.0 + 60.0 * static_cast<double>(i);
    const double east = (i % 2 == 0) ? r : -r;
    const double north = (i % 3 == 0) ? r / 2 : -r / 2;
    shops.push_back(make_shop(n, promoted[i].first, promoted[i].second, "Beijing",
                              offset_m(beijing, east, north)));
    fx.config.score_offsets[shop_id(n)] = 0.5;
    ++n;
  }
  // Makes "Freshside" a shared token so that "SPA" is the rarer segment.
  shops.push_back(make_shop(n++, "Freshside Bakery", "Bakery", "Guangzhou", {113.2600, 23.1300}));

  // Landmark case, Shanghai.
  const GeoPoint fangbang{121.4900, 31.2300};
  fx.landmark_target_id = shop_id(n);
  shops.push_back(make_shop(n++, "F's Seafood Barbecue (Fangbang)", "Barbecue", "Shanghai",
                            offset_m(fangbang, 800.0, 0.0)));
  const std::array kGrills = {"Ember Barbecue",  "Charcoal Yard", "Smoky Alley",
                              "Skewer Street",   "Firepit Grill", "Redcoal Barbecue"};
  for (std::size_t i = 0; i < kGrills.size(); ++i) {
    const double r = 60.0 + 40.0 * static_cast<double>(i);
    const double east = (i % 2 == 0) ? -r : r / 3;
    const double north = (i % 3 == 1) ? -r / 2 : r / 2;
    shops.push_back(
        make_shop(n++, kGrills[i], "Barbecue", "Shanghai", offset_m(fangbang, east, north)));
  }
  fx.config.landmarks["Fangbang"] = fangbang;

  // Hangzhou: an inactive shop, a shop closed at the fixture time, filler.
  const GeoPoint hangzhou{120.1500, 30.2700};
  fx.inactive_shop_id = shop_id(n);
  Shop gone = make_shop(n++, "Moonwell Tailor", "Tailor", "Hangzhou", offset_m(hangzhou, -900, 400));
  gone.active = false;
  shops.push_back(gone);
  fx.closed_shop_id = shop_id(n);
  shops.push_back(make_shop(n++, "Dawnbreak Congee", "Breakfast", "Hangzhou",
                            offset_m(hangzhou, 700, -650), "06:00-11:00"));

  // Distributions are spelled out so the fixture is the same under every
  // standard library.
  std::mt19937_64 rng(seed);
  auto pick = [&rng](std::size_t size) { return static_cast<std::size_t>(rng() % size); };
  auto spread = [&rng] {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return -2500.0 + 5000.0 * unit;
  };
  std::set<std::string> names;
  while (shops.size() < 50) {
    std::string name = std::string(kAdjectives[pick(kAdjectives.size())]) + " " +
                       kNouns[pick(kNouns.size())];
    if (!names.insert(name).second) continue;
    const double east = spread();
    const double north = spread();
    shops.push_back(make_shop(n++, name, kTypes[pick(kTypes.size())], "Hangzhou",
                              offset_m(hangzhou, east, north), kHours[pick(kHours.size())]));
  }

  auto& cfg = fx.config;
  cfg.page_cap = 5;
  cfg.radius_m = 3000.0;
  cfg.token_weight = 1.0;
  cfg.distance_weight = 0.1;
  cfg.seed = seed;
  sim::FaultSpec seg;
  seg.kind = sim::FaultKind::kSegmentationMainPart;
  seg.query_pattern = "freshside spa";
  seg.main_part = "Freshside";
  cfg.faults.push_back(seg);
  sim::FaultSpec land;
  land.kind = sim::FaultKind::kLandmarkMisparse;
  land.shop_id = fx.landmark_target_id;
  land.fragment = "Fangbang";
  cfg.faults.push_back(land);

  fx.context.account_id = "acct-fixture-0001";
  fx.context.timestamp = LocalDateTime::parse("2024-06-01T14:30:00");
  fx.context.page_size = 5;
  fx.context.page_depth = 1;
  fx.window = TimeWindow::parse("10:00-21:00");

  fx.planted = {{fx.segmentation_target_id, "Freshside SPA"},
                {fx.landmark_target_id, "Barbecue Fangbang"}};
  std::sort(fx.planted.begin(), fx.planted.end());
  return fx;
}

void write_fixture_files(const SeededFixture& fx, const std::filesystem::path& out,
                         int http_port) {
  pipeline::write_file(out / "catalog.csv", emit_catalog(fx.catalog, CatalogFormat::kCsv));
  pipeline::write_file(out / "sim.json", sim::sim_config_to_json(fx.config).dump(2) + "\n");
  pipeline::write_file(out / "sim_nofault.json",
                       sim::sim_config_to_json(fx.config.without_faults()).dump(2) + "\n");
  pipeline::write_file(out / "run.json", run_config(fx, "fixture", "sim.json", nullptr).dump(2) + "\n");
  pipeline::write_file(out / "run_nofault.json",
                       run_config(fx, "fixture-nofault", "sim_nofault.json", nullptr).dump(2) + "\n");
  const json http = {{"kind", "http"},
                     {"sim_config", "sim.json"},
                     {"http", {{"base_url", "http://127.0.0.1:" + std::to_string(http_port)},
                               {"timeout_ms", 5000}}}};
  pipeline::write_file(out / "run_http.json", run_config(fx, "fixture", "sim.json", http).dump(2) + "\n");
  json planted = json::array();
  for (const auto& p : fx.planted) planted.push_back({{"shop_id", p.shop_id}, {"query", p.query_text}});
  pipeline::write_file(out / "planted.json", planted.dump(2) + "\n");
}

}  // namespace recallprobe::fixture
