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

#include <gtest/gtest.h>

#include "recallprobe/catalog.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/fixture.hpp"

namespace rp = recallprobe;

namespace {

rp::Shop valid_shop() {
  rp::Shop s;
  s.id = "s1";
  s.name = "Old Flavor Hotpot";
  s.shop_type = "Beijing hotpot";
  s.city = "Beijing";
  s.location = {116.3, 40.5};
  return s;
}

}  // namespace

TEST(Catalog, ParsesTableRow) {
  const auto r = rp::parse_catalog(
      "name,type,city,lon,lat\nOld Flavor Hotpot,Beijing hotpot,Beijing,116.3,40.5\n",
      rp::CatalogFormat::kCsv);
  ASSERT_EQ(r.catalog.shops.size(), 1u);
  const auto& s = r.catalog.shops[0];
  EXPECT_EQ(s.name, "Old Flavor Hotpot");
  EXPECT_EQ(s.shop_type, "Beijing hotpot");
  EXPECT_EQ(s.city, "Beijing");
  EXPECT_DOUBLE_EQ(s.location.lon, 116.3);
  EXPECT_DOUBLE_EQ(s.location.lat, 40.5);
  EXPECT_FALSE(s.id.empty());
  EXPECT_TRUE(s.opening_hours.empty());
  EXPECT_TRUE(s.active);
}

TEST(Catalog, EmptyFileWithHeader) {
  const auto r = rp::parse_catalog("id,name,type,city,lon,lat,hours\n", rp::CatalogFormat::kCsv);
  EXPECT_TRUE(r.catalog.shops.empty());
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Catalog, RangeErrorRejectsRow) {
  const auto r = rp::parse_catalog(
      "name,type,city,lon,lat\nA,b,c,116.3,400.5\nB,b,c,116.3,40.5\n", rp::CatalogFormat::kCsv);
  EXPECT_EQ(r.catalog.shops.size(), 1u);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].row, 1u);
  EXPECT_EQ(r.rows_in, 2u);
}

TEST(Catalog, BadEncodingAndHeaderAreFatal) {
  EXPECT_THROW(rp::parse_catalog("name,type,city,lon,lat\n\xff,b,c,1,2\n", rp::CatalogFormat::kCsv),
               rp::ParseError);
  EXPECT_THROW(rp::parse_catalog("name,kind,city,lon,lat\n", rp::CatalogFormat::kCsv),
               rp::ParseError);
  EXPECT_THROW(rp::parse_catalog("[{", rp::CatalogFormat::kJson), rp::ParseError);
}

TEST(Catalog, DuplicateIdsRejected) {
  const auto r = rp::parse_catalog("id,name,type,city,lon,lat\nx,A,t,c,1,2\nx,B,t,c,1,2\n",
                                   rp::CatalogFormat::kCsv);
  EXPECT_EQ(r.catalog.shops.size(), 1u);
  EXPECT_EQ(r.rejected.size(), 1u);
}

TEST(Catalog, ValidateShop) {
  EXPECT_TRUE(rp::validate_shop(valid_shop()).empty());
  auto unnamed = valid_shop();
  unnamed.name = "  ";
  EXPECT_EQ(rp::validate_shop(unnamed), std::vector{rp::ShopViolation::kEmptyName});
  auto inverted = valid_shop();
  inverted.opening_hours = {{22 * 60, 10 * 60}};
  EXPECT_EQ(rp::validate_shop(inverted), std::vector{rp::ShopViolation::kInvertedOpeningInterval});
}

TEST(Catalog, OpeningHours) {
  const auto hours = rp::parse_opening_hours("10:00-14:00;17:00-24:00");
  ASSERT_EQ(hours.size(), 2u);
  EXPECT_EQ(rp::format_opening_hours(hours), "10:00-14:00;17:00-24:00");
  rp::Shop s = valid_shop();
  s.opening_hours = hours;
  EXPECT_TRUE(s.is_open_at(10 * 60));
  EXPECT_FALSE(s.is_open_at(14 * 60));
  EXPECT_FALSE(s.is_open_at(15 * 60 + 59));
  EXPECT_TRUE(s.is_open_at(23 * 60 + 59));
}

TEST(Catalog, RoundTripBothFormatsAndCountConservation) {
  const auto fx = rp::fixture::make_seeded_fixture();
  for (auto fmt : {rp::CatalogFormat::kCsv, rp::CatalogFormat::kJson}) {
    const std::string bytes = rp::emit_catalog(fx.catalog, fmt);
    const auto r = rp::parse_catalog(bytes, fmt);
    EXPECT_EQ(r.catalog.shops, fx.catalog.shops);
    EXPECT_EQ(r.rows_in, r.catalog.shops.size() + r.rejected.size());
    EXPECT_EQ(rp::emit_catalog(r.catalog, fmt), bytes);
  }
}

TEST(Catalog, CountConservationWithBadRows) {
  const std::string csv =
      "name,type,city,lon,lat,hours\n"
      "A,t,c,1,2,\n"
      ",t,c,1,2,\n"
      "B,t,c,181,2,\n"
      "C,t,c,1,2,22:00-10:00\n"
      "D,t,c,x,2,\n";
  const auto r = rp::parse_catalog(csv, rp::CatalogFormat::kCsv);
  EXPECT_EQ(r.rows_in, 5u);
  EXPECT_EQ(r.catalog.shops.size(), 1u);
  EXPECT_EQ(r.rejected.size(), 4u);
}

TEST(Catalog, NormalizesText) {
  const auto r = rp::parse_catalog("name,type,city,lon,lat\n\"  Caf\xC3\xA9   Blue \",cafe,X,1,2\n",
                                   rp::CatalogFormat::kCsv);
  ASSERT_EQ(r.catalog.shops.size(), 1u);
  EXPECT_EQ(r.catalog.shops[0].name, "Caf\xC3\xA9 Blue");
}

TEST(Catalog, Haversine) {
  // One degree of latitude is about 111.2 km.
  EXPECT_NEAR(rp::haversine_meters({0, 0}, {0, 1}), 111195.0, 50.0);
  EXPECT_DOUBLE_EQ(rp::haversine_meters({116.4, 39.9}, {116.4, 39.9}), 0.0);
}
