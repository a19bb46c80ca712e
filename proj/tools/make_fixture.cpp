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

// Writes the seeded fixture (catalog, simulator configs and run configs) to a
// directory so the CLI can be exercised end to end.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "recallprobe/fixture.hpp"

namespace rp = recallprobe;

int main(int argc, char** argv) {
  CLI::App app{"Write the seeded fixture"};
  std::string dir = "fixture";
  std::uint64_t seed = rp::fixture::kDefaultSeed;
  int http_port = 8088;
  app.add_option("dir", dir, "Output directory");
  app.add_option("--seed", seed, "Filler seed");
  app.add_option("--http-port", http_port, "Port used by run_http.json");
  CLI11_PARSE(app, argc, argv);

  try {
    rp::fixture::write_fixture_files(rp::fixture::make_seeded_fixture(seed), dir, http_port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
