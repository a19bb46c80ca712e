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

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <pthread.h>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/pipeline.hpp"
#include "recallprobe/sim.hpp"

namespace rp = recallprobe;
namespace pl = recallprobe::pipeline;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

pl::RunConfig load(const Globals& g) {
  if (g.config.empty()) throw rp::ConfigError("--config is required");
  pl::RunConfig c = pl::load_run_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.out_dir = g.out;
  return c;
}

int report_stage(const pl::StageResult& r) {
  for (const auto& m : r.messages) std::cerr << m << '\n';
  return r.exit_code;
}

int serve(const pl::RunConfig& config, const std::string& host, int port) {
  const auto parsed = rp::parse_catalog(pl::read_file(config.catalog_path), config.catalog_format,
                                        config.catalog_path.filename().string());
  const auto sim_json = nlohmann::json::parse(pl::read_file(config.sim_config_path));
  auto simulator = std::make_shared<rp::sim::Simulator>(parsed.catalog,
                                                        rp::sim::sim_config_from_json(sim_json));

  // Block termination signals before any server thread starts so only the
  // waiter below receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGTERM);
  sigaddset(&set, SIGINT);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  rp::sim::SimServer server(simulator);
  if (!server.bind(host, port)) {
    std::cerr << "cannot bind " << host << ":" << port << '\n';
    return pl::kExitFatal;
  }
  std::cout << "listening on " << host << ":" << server.port() << std::endl;

  std::thread waiter([&server, set] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen();
  // listen() may also return on its own; wake the waiter so it can exit.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cerr << "shut down\n";
  return pl::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Missed-recall detection for location-based shop search"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run config (JSON)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out, "Override the output directory");

  auto* ingest = app.add_subcommand("ingest", "Parse and validate the shop catalog");
  auto* generate = app.add_subcommand("generate", "Generate query groups");
  auto* validate = app.add_subcommand("validate", "Judge and filter query groups");
  auto* run = app.add_subcommand("run", "Execute groups and evaluate the oracle");
  bool all = false;
  run->add_flag("--all", all, "Run ingest, generate and validate first");
  auto* report = app.add_subcommand("report", "Apply confirmation labels and write the final report");
  std::string confirmations;
  report->add_option("--confirmations", confirmations, "finding_id,label,annotator,notes CSV");
  auto* sim_serve = app.add_subcommand("sim-serve", "Serve the reference simulator over HTTP");
  std::string host = "127.0.0.1";
  int port = 8088;
  sim_serve->add_option("--host", host, "Bind address");
  sim_serve->add_option("--port", port, "Port; 0 picks a free one");

  // Allow the global flags after the subcommand as well.
  for (auto* sub : {ingest, generate, validate, run, report, sim_serve}) {
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    pl::RunConfig config = load(g);
    if (*ingest) return report_stage(pl::stage_ingest(config));
    if (*generate) return report_stage(pl::stage_generate(config));
    if (*validate) return report_stage(pl::stage_validate(config));
    if (*run) {
      if (all) {
        for (auto* stage : {&pl::stage_ingest, &pl::stage_generate, &pl::stage_validate}) {
          const int rc = report_stage(stage(config));
          if (rc == pl::kExitFatal) return rc;
        }
      }
      return report_stage(pl::stage_run(config));
    }
    if (*report) {
      if (!confirmations.empty()) config.confirmations = confirmations;
      const auto r = pl::stage_report(config);
      std::cout << r.messages.back();
      for (std::size_t i = 0; i + 1 < r.messages.size(); ++i) std::cerr << r.messages[i] << '\n';
      return r.exit_code;
    }
    if (*sim_serve) return serve(config, host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pl::kExitFatal;
  }
  return pl::kExitFatal;
}
