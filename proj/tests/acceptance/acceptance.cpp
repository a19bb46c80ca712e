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

// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--allow-known-deviation=2]
//
// Exit status is 0 only when every criterion passes. The flag tolerates the
// single documented deviation of criterion 2 (see README); every other check
// in that criterion must still pass.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "recallprobe/fixture.hpp"
#include "recallprobe/llm.hpp"
#include "recallprobe/metrics.hpp"
#include "recallprobe/oracle.hpp"
#include "recallprobe/pipeline.hpp"
#include "recallprobe/sim.hpp"
#include "recallprobe/text.hpp"
#include "recallprobe/validation.hpp"
#include "temp_dir.hpp"

namespace rp = recallprobe;
namespace pl = recallprobe::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> failures;  // failed sub-checks, "key: detail"
  std::string detail;

  void check(bool ok, const std::string& key, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(key + ": " + what);
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Writes the seeded fixture and loads one of its run configs with out_dir
// redirected under the temp dir.
struct Workspace {
  rp::testing::TempDir tmp;
  rp::fixture::SeededFixture fx = rp::fixture::make_seeded_fixture();

  Workspace() { rp::fixture::write_fixture_files(fx, tmp.path()); }

  json raw(const std::string& name) const { return json::parse(pl::read_file(tmp.path() / name)); }
  pl::RunConfig config(json j, const std::string& out) const {
    j["out_dir"] = out;
    return pl::run_config_from_json(j, tmp.path());
  }
};

int run_stages(const pl::RunConfig& c) {
  for (auto* stage : {&pl::stage_ingest, &pl::stage_generate, &pl::stage_validate}) {
    const int rc = stage(c).exit_code;
    if (rc != pl::kExitOk) return rc;
  }
  return pl::stage_run(c).exit_code;
}

using Key = std::pair<std::string, std::string>;

std::vector<Key> keys(const std::vector<rp::MissedRecallFinding>& fs) {
  std::vector<Key> out;
  for (const auto& f : fs) out.emplace_back(f.target_shop_id, f.failing_query.text);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Key> keys(const std::vector<rp::sim::ExpectedFinding>& fs) {
  std::vector<Key> out;
  for (const auto& f : fs) out.emplace_back(f.shop_id, f.query_text);
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  std::size_t vectors = 0;
  for (std::size_t n = 2; n <= 10; ++n) {
    rp::QueryGroup g;
    g.target_shop_id = "t";
    for (std::size_t i = 0; i < n; ++i) g.queries.push_back({"q" + std::to_string(i), "t"});
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<bool> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1u;
      bool differ = false;
      for (std::size_t i = 0; i < n && !differ; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (y[i] != y[j]) {
            differ = true;
            break;
          }
        }
      }
      const auto falses = static_cast<std::size_t>(std::count(y.begin(), y.end(), false));
      const auto want = differ        ? rp::Classification::kViolation
                        : falses == n ? rp::Classification::kSuppressedAllFalse
                                      : rp::Classification::kConsistentAllTrue;
      const std::size_t want_findings = differ ? falses : 0;
      const auto ev = rp::evaluate_group(g, y);
      if (ev.verdict.classification != want || ev.findings.size() != want_findings) {
        o.check(false, "n=" + std::to_string(n), "mask " + std::to_string(mask) + " disagrees");
      }
      ++vectors;
    }
  }
  const double secs = seconds_since(t0);
  o.check(secs < 5.0, "time", fmt("%.2f s", secs));
  o.detail = std::to_string(vectors) + " vectors, " + fmt("%.2f s", secs);
  return o;
}

Outcome criterion2() {
  Outcome o;
  struct Row {
    const char* name;
    std::size_t reported, confirmed, total;
    double r_fp, e_tc;
  };
  const Row rows[] = {
      {"47/46/3724", 47, 46, 3724, 0.021, 80.950},
      {"35/6/2607", 35, 6, 2607, 0.829, 434.500},
      {"54/32/3803", 54, 32, 3803, 0.407, 118.844},
      {"118/101/6396", 118, 101, 6396, 0.144, 63.327},
  };
  std::ostringstream detail;
  for (const auto& r : rows) {
    const auto m = rp::metrics_from_counts(r.reported, r.confirmed, r.total);
    const double rfp = m.false_positive_ratio.value.value_or(-1.0);
    const double etc = m.test_case_efficiency.value.value_or(-1.0);
    o.check(std::abs(rfp - r.r_fp) <= 0.0005, std::string(r.name) + ".r_fp",
            rp::format_fixed3(rfp) + " vs " + rp::format_fixed3(r.r_fp));
    o.check(std::abs(etc - r.e_tc) <= 0.001, std::string(r.name) + ".e_tc",
            rp::format_fixed3(etc) + " vs " + rp::format_fixed3(r.e_tc));
    detail << r.name << " " << rp::format_fixed3(rfp) << "/" << rp::format_fixed3(etc) << " ";
  }
  o.detail = detail.str();
  return o;
}

// Criteria 3 and 5 share the faulted run.
struct SeededRun {
  Outcome c3;
  Outcome c5;
};

SeededRun criteria3and5() {
  SeededRun out;
  Workspace ws;
  const auto c = ws.config(ws.raw("run.json"), "out/seeded");
  const auto t0 = Clock::now();
  const auto mem = pl::run_in_memory(c, ws.fx.catalog);
  const double secs = seconds_since(t0);

  std::vector<rp::QueryGroup> groups;
  for (const auto& v : mem.validated) groups.push_back(v.group);
  const auto sim_cfg = rp::sim::sim_config_from_json(ws.raw("sim.json"));
  auto base = ws.fx.context;
  base.timestamp = *c.timestamp;
  const auto truth = keys(rp::sim::ground_truth_misses(ws.fx.catalog, groups, sim_cfg, base));
  const auto found = keys(mem.detection.evaluation.findings);

  Outcome& o3 = out.c3;
  std::vector<Key> missed;
  std::vector<Key> extra;
  std::set_difference(truth.begin(), truth.end(), found.begin(), found.end(),
                      std::back_inserter(missed));
  std::set_difference(found.begin(), found.end(), truth.begin(), truth.end(),
                      std::back_inserter(extra));
  o3.check(missed.empty(), "missed", std::to_string(missed.size()) + " planted findings not reported");
  o3.check(extra.empty(), "extra", std::to_string(extra.size()) + " unexpected findings");
  o3.check(truth.size() == 2, "planted", std::to_string(truth.size()) + " ground-truth misses, expected 2");
  o3.check(secs < 60.0, "time", fmt("%.2f s", secs));
  o3.detail = std::to_string(found.size()) + " findings over " + std::to_string(ws.fx.catalog.shops.size()) +
              " shops, " + std::to_string(mem.detection.report.ledger.n_total) + " queries, " +
              fmt("%.2f s", secs);

  Outcome& o5 = out.c5;
  const rp::GroupVerdict* inactive = nullptr;
  for (const auto& v : mem.detection.evaluation.verdicts) {
    if (v.target_shop_id == ws.fx.inactive_shop_id) inactive = &v;
  }
  o5.check(inactive != nullptr, "group", "no verdict for the inactive shop");
  if (inactive) {
    o5.check(inactive->classification == rp::Classification::kSuppressedAllFalse, "classification",
             std::string(rp::to_string(inactive->classification)));
    const bool all_missed = std::all_of(inactive->outcomes.begin(), inactive->outcomes.end(),
                                        [](rp::QueryOutcome q) { return q == rp::QueryOutcome::kMissed; });
    o5.check(all_missed && inactive->outcomes.size() >= 2, "outcomes", "not all false");
    o5.detail = ws.fx.inactive_shop_id + " " + std::string(rp::to_string(inactive->classification)) +
                " over " + std::to_string(inactive->outcomes.size()) + " queries";
  }
  std::size_t inactive_findings = 0;
  for (const auto& f : mem.detection.evaluation.findings) {
    if (f.target_shop_id == ws.fx.inactive_shop_id) ++inactive_findings;
  }
  o5.check(inactive_findings == 0, "findings", std::to_string(inactive_findings) + " findings");
  return out;
}

Outcome criterion4() {
  Outcome o;
  Workspace ws;
  const auto c = ws.config(ws.raw("run_nofault.json"), "out/nofault");
  const auto t0 = Clock::now();
  const auto mem = pl::run_in_memory(c, ws.fx.catalog);
  o.check(mem.detection.evaluation.findings.empty(), "soundness",
          std::to_string(mem.detection.evaluation.findings.size()) + " findings without faults");

  // Completeness: full name, own coordinates, inside opening hours, fewer
  // than K shops sharing the main-part token.
  const auto cfg = rp::sim::sim_config_from_json(ws.raw("sim_nofault.json"));
  rp::sim::Simulator simulator(ws.fx.catalog, cfg);
  const int k = c.page_size * c.page_depth;
  std::size_t checked = 0;
  for (const auto& shop : ws.fx.catalog.shops) {
    if (!shop.active) continue;
    const auto seg = rp::sim::segment(shop.name, simulator.index(), cfg);
    const auto& main = seg.folded[seg.main_index];
    std::size_t sharing = 0;
    for (const auto& other : ws.fx.catalog.shops) {
      auto toks = rp::text::folded_tokens(other.name + " " + other.shop_type);
      if (std::find(toks.begin(), toks.end(), main) != toks.end()) ++sharing;
    }
    if (sharing >= static_cast<std::size_t>(k)) continue;
    const int minute = shop.opening_hours.empty() ? 12 * 60 : shop.opening_hours.front().open_minute;
    char ts[32];
    std::snprintf(ts, sizeof ts, "2024-06-01T%02d:%02d:00", minute / 60, minute % 60);
    rp::SearchRequest req{shop.name, shop.location, c.account_id, ts, k};
    const auto res = simulator.search(req);
    const bool hit = std::any_of(res.entries.begin(), res.entries.end(),
                                 [&](const rp::ResultEntry& e) { return e.shop_id == shop.id; });
    o.check(hit, shop.id, "full name \"" + shop.name + "\" not recalled");
    ++checked;
  }
  const double secs = seconds_since(t0);
  o.check(checked > 0, "completeness", "no shop met the preconditions");
  o.check(secs < 60.0, "time", fmt("%.2f s", secs));
  o.detail = "0 findings expected, " + std::to_string(mem.detection.evaluation.findings.size()) +
             " found; " + std::to_string(checked) + " full-name queries checked, " + fmt("%.2f s", secs);
  return o;
}

Outcome criterion6() {
  Outcome o;
  namespace llm = rp::llm;
  httplib::Server server;
  int hits = 0;
  std::mutex mu;
  server.Post("/flaky/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lock(mu);
    if (++hits <= 2) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"KEEP: fine"}}]})",
                    "application/json");
  });
  server.Post("/slow/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    res.set_content("{}", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  // Short timeouts come from the run config, as a user would set them.
  const json cfg = {{"catalog", {{"path", "unused.csv"}}},
                    {"backend", {{"kind", "http"}, {"http", {{"base_url", base}}}}},
                    {"llm",
                     {{"base_url", base}, {"model", "mock"}, {"timeout_ms", 100}, {"max_retries", 3},
                      {"wait_min_ms", 1}, {"wait_max_ms", 5}}}};
  const auto rc = pl::run_config_from_json(cfg, ".");
  llm::ChatRequest req;
  req.messages.push_back({llm::ChatRole::kUser, "ping"});

  auto endpoint = rc.llm.endpoint;
  endpoint.path = "/flaky/v1/chat/completions";
  llm::HttpChatTransport flaky(endpoint);
  std::size_t ok_attempts = 0;
  try {
    const auto c = llm::complete(req, rc.llm.retry, flaky);
    ok_attempts = c.attempts.size();
    o.check(c.text == "KEEP: fine", "flaky.text", c.text);
  } catch (const std::exception& e) {
    o.check(false, "flaky", e.what());
  }
  o.check(ok_attempts == 3, "flaky.attempts", std::to_string(ok_attempts));

  endpoint.path = "/slow/v1/chat/completions";
  llm::HttpChatTransport slow(endpoint);
  std::size_t slow_attempts = 0;
  std::string kind = "none";
  try {
    llm::complete(req, rc.llm.retry, slow);
    o.check(false, "slow", "succeeded");
  } catch (const llm::TransportError& e) {
    slow_attempts = e.attempts().size();
    kind = std::string(llm::to_string(e.kind()));
  }
  o.check(slow_attempts == 4, "slow.attempts", std::to_string(slow_attempts));
  o.check(kind == "timeout_exhausted", "slow.kind", kind);
  server.stop();
  th.join();
  o.detail = "flaky endpoint: " + std::to_string(ok_attempts) + " attempts; timing-out endpoint: " +
             kind + " after " + std::to_string(slow_attempts) + " attempts";
  return o;
}

Outcome criterion7() {
  Outcome o;
  rp::testing::TempDir tmp;
  rp::Catalog cat;
  rp::Shop shop;
  shop.id = "shop-ma";
  shop.name = "Ma's Burger (Sanlitun)";
  shop.shop_type = "Burger Restaurant";
  shop.city = "Beijing";
  shop.location = {116.45, 39.93};
  cat.shops.push_back(shop);
  pl::write_file(tmp.path() / "catalog.csv", rp::emit_catalog(cat, rp::CatalogFormat::kCsv));
  pl::write_file(tmp.path() / "sim.json", rp::sim::sim_config_to_json({}).dump());
  const json replies = {{"Query: Ma's Burger", "KEEP: the full name"},
                        {"Query: hamburgers near Sanlitun", "Hard to say, maybe."},
                        {"Query: Burger Restaurant", "KEEP: type query"}};
  pl::write_file(tmp.path() / "judge.json", replies.dump());
  const json cfg = {{"catalog", {{"path", "catalog.csv"}}},
                    {"out_dir", "out"},
                    {"validation", {{"kind", "llm"}, {"mock_replies", "judge.json"}}},
                    {"backend", {{"kind", "sim"}, {"sim_config", "sim.json"}}}};
  const auto c = pl::run_config_from_json(cfg, tmp.path());
  rp::QueryGroup g;
  g.target_shop_id = shop.id;
  g.queries = {{"Ma's Burger", shop.id, rp::Derivation::kName},
               {"hamburgers near Sanlitun", shop.id, rp::Derivation::kLocation},
               {"Burger Restaurant", shop.id, rp::Derivation::kServiceProduct}};
  pl::stage_ingest(c);
  pl::write_file(c.out_dir / "groups.jsonl", json(g).dump() + "\n");
  pl::stage_validate(c);

  const auto kept = pl::read_groups(c.out_dir / "validated.jsonl");
  o.check(kept.size() == 1, "groups", std::to_string(kept.size()));
  const std::size_t n_kept = kept.empty() ? 0 : kept[0].queries.size();
  o.check(n_kept == 2, "kept", std::to_string(n_kept));
  const auto drops = pl::read_file(c.out_dir / "drops.jsonl");
  const auto lines = std::count(drops.begin(), drops.end(), '\n');
  o.check(lines == 1, "drops", std::to_string(lines) + " audit rows");
  std::string dropped_text;
  std::string verdict;
  if (lines == 1) {
    const auto row = json::parse(drops);
    dropped_text = row.at("query").at("text").get<std::string>();
    verdict = row.at("verdict").get<std::string>();
  }
  o.check(dropped_text == "hamburgers near Sanlitun", "dropped", dropped_text);
  o.check(verdict == "unclear", "verdict", verdict);
  o.detail = "3 -> " + std::to_string(n_kept) + " queries, audited drop \"" + dropped_text + "\" (" +
             verdict + ")";
  return o;
}

Outcome criterion8() {
  Outcome o;
  Workspace ws;
  auto simulator = std::make_shared<rp::sim::Simulator>(
      ws.fx.catalog, rp::sim::sim_config_from_json(ws.raw("sim.json")));
  rp::sim::SimServer server(simulator);
  if (!server.bind("127.0.0.1", 0)) {
    o.check(false, "bind", "cannot bind a local port");
    return o;
  }
  std::thread th([&] { server.listen(); });
  httplib::Client probe("127.0.0.1", server.port());
  for (int i = 0; i < 100 && !probe.Get("/health"); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }

  const auto local = ws.config(ws.raw("run.json"), "out/local");
  auto http_json = ws.raw("run_http.json");
  http_json["backend"]["http"]["base_url"] = "http://127.0.0.1:" + std::to_string(server.port());
  const auto remote = ws.config(http_json, "out/http");
  const int rc_local = run_stages(local);
  const int rc_remote = run_stages(remote);
  server.stop();
  th.join();
  o.check(rc_local == 0 && rc_remote == 0, "exit",
          std::to_string(rc_local) + "/" + std::to_string(rc_remote));

  const auto f_local = pl::read_file(local.out_dir / "findings.jsonl");
  const auto f_remote = pl::read_file(remote.out_dir / "findings.jsonl");
  o.check(f_local == f_remote, "findings", "findings.jsonl differs");
  const auto m_local = json::parse(pl::read_file(local.out_dir / "report.json")).at("metrics");
  const auto m_remote = json::parse(pl::read_file(remote.out_dir / "report.json")).at("metrics");
  o.check(m_local == m_remote, "metrics", m_local.dump() + " vs " + m_remote.dump());
  const auto n = pl::read_findings(local.out_dir / "findings.jsonl").size();
  o.check(n > 0, "nonempty", "no findings to compare");
  o.detail = std::to_string(n) + " findings in both modes, metrics " + m_local.dump();
  return o;
}

Outcome criterion9() {
  Outcome o;
  Workspace ws;
  const auto a = ws.config(ws.raw("run.json"), "out/a");
  const auto b = ws.config(ws.raw("run.json"), "out/b");
  o.check(run_stages(a) == 0 && run_stages(b) == 0, "exit", "a stage failed");
  for (const auto* cfg : {&a, &b}) {
    o.check(pl::stage_report(*cfg).exit_code == 0, "report", "report stage failed");
  }
  std::size_t compared = 0;
  for (const char* f : {"findings.jsonl", "report.json", "report.txt", "report.csv", "final_report.json",
                        "final_report.txt", "final_report.csv"}) {
    const bool same = pl::read_file(a.out_dir / f) == pl::read_file(b.out_dir / f);
    o.check(same, f, "differs between runs");
    ++compared;
  }
  o.detail = std::to_string(compared) + " files byte-identical";
  return o;
}

// The E_tc of the 47/46/3724 row cannot meet its tolerance: 3724/46 rounds to
// 80.957 while the expected value is the printed, truncated 80.95.
bool is_known_deviation(int id, const Outcome& o) {
  if (id != 2) return false;
  return o.failures.size() == 1 && o.failures[0] == "47/46/3724.e_tc: 80.957 vs 80.950";
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> allowed;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string flag = "--allow-known-deviation=";
    if (arg.rfind(flag, 0) == 0) {
      allowed.insert(std::stoi(arg.substr(flag.size())));
    } else {
      std::cerr << "usage: acceptance [--allow-known-deviation=N]\n";
      return 2;
    }
  }

  std::map<int, Outcome> results;
  auto guarded = [&](int id, const std::function<Outcome()>& fn) {
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      Outcome o;
      o.check(false, "exception", e.what());
      results[id] = o;
    }
  };
  guarded(1, criterion1);
  guarded(2, criterion2);
  try {
    auto seeded = criteria3and5();
    results[3] = seeded.c3;
    results[5] = seeded.c5;
  } catch (const std::exception& e) {
    for (int id : {3, 5}) {
      Outcome o;
      o.check(false, "exception", e.what());
      results[id] = o;
    }
  }
  guarded(4, criterion4);
  guarded(6, criterion6);
  guarded(7, criterion7);
  guarded(8, criterion8);
  guarded(9, criterion9);

  const std::map<int, std::string> names = {
      {1, "oracle brute-force equivalence"}, {2, "metric fixtures"},
      {3, "seeded detection equals ground truth"}, {4, "no-fault soundness"},
      {5, "all-false suppression"}, {6, "retry contract"},
      {7, "cautious validation"}, {8, "cross-mode equivalence"},
      {9, "determinism"}};
  int failed = 0;
  int tolerated = 0;
  for (const auto& [id, o] : results) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << names.at(id) << "): " << o.detail;
    for (const auto& f : o.failures) std::cout << " [" << f << "]";
    if (!o.pass && allowed.contains(id) && is_known_deviation(id, o)) {
      std::cout << " (known deviation, tolerated)";
      ++tolerated;
    } else if (!o.pass) {
      ++failed;
    }
    std::cout << '\n';
  }
  std::cout << results.size() - failed - tolerated << " passed, " << failed << " failed";
  if (tolerated) std::cout << ", " << tolerated << " known deviation(s) tolerated";
  std::cout << '\n';
  return failed == 0 ? 0 : 1;
}
