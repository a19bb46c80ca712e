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
#include <filesystem>
#include <string>
#include <vector>

#include "recallprobe/catalog.hpp"
#include "recallprobe/search.hpp"
#include "recallprobe/sim.hpp"

namespace recallprobe::fixture {

// A ~50-shop catalog with two planted faults:
//
//  * "Freshside Healthy SPA" in Beijing, surrounded by promoted shops whose
//    single-word names merely contain "Freshside". The segmentation fault
//    makes "Freshside SPA" recall by name containment, and the competitors
//    push the target off the page.
//  * "F's Seafood Barbecue (Fangbang)" in Shanghai, 800 m from the Fangbang
//    landmark, with barbecue shops right next to the landmark. The landmark
//    fault reads "Fangbang" in "Barbecue Fangbang" as a place.
//
// Filler shops live in Hangzhou and never share a page with the planted
// cases. One inactive shop and one shop closed at the fixture time are
// included.
struct SeededFixture {
  Catalog catalog;
  sim::SimConfig config;  // faults enabled
  SearchContext context;  // location is overridden per target
  TimeWindow window;
  std::vector<sim::ExpectedFinding> planted;
  std::string segmentation_target_id;
  std::string landmark_target_id;
  std::string inactive_shop_id;
  std::string closed_shop_id;
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

SeededFixture make_seeded_fixture(std::uint64_t seed = kDefaultSeed);

/// Writes catalog.csv, sim.json, sim_nofault.json, run.json, run_nofault.json,
/// run_http.json (HTTP backend on 127.0.0.1:http_port) and planted.json.
/// Run configs use relative paths and out_dir "out/<run_id>".
void write_fixture_files(const SeededFixture& fx, const std::filesystem::path& dir,
                         int http_port = 8088);

}  // namespace recallprobe::fixture
