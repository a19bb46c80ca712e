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

#include "recallprobe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "recallprobe/digest.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/sim.hpp"

namespace recallprobe::pipeline {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

GeneratorKind parse_generator(const std::string& s) {
  if (s == "template") return GeneratorKind::kTemplate;
  if (s == "llm") return GeneratorKind::kLlm;
  throw ConfigError("generator.kind must be template or llm, got " + s);
}

ValidationKind parse_validation(const std::string& s) {
  if (s == "rule") return ValidationKind::kRule;
  if (s == "llm") return ValidationKind::kLlm;
  if (s == "off") return ValidationKind::kOff;
  throw ConfigError("validation.kind must be rule, llm or off, got " + s);
}

BackendKind parse_backend(const std::string& s) {
  if (s == "sim") return BackendKind::kSim;
  if (s == "http") return BackendKind::kHttp;
  throw ConfigError("backend.kind must be sim or http, got " + s);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first_error) first_error = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::map<std::string, const Shop*> shops_by_id(const Catalog& catalog) {
  std::map<std::string, const Shop*> out;
  for (const auto& s : catalog.shops) out.emplace(s.id, &s);
  return out;
}

std::shared_ptr<llm::ChatTransport> make_transport(const RunConfig& config,
                                                   const fs::path& mock_replies) {
  if (!mock_replies.empty()) {
    return std::make_shared<llm::ReplayTransport>(
        llm::ReplayTransport::from_json(json::parse(read_file(mock_replies))));
  }
  if (config.llm.endpoint.base_url.empty()) {
    throw ConfigError("llm.base_url is required when no mock replies are configured");
  }
  return std::make_shared<llm::HttpChatTransport>(config.llm.endpoint);
}

llm::Gateway make_gateway(const RunConfig& config, const fs::path& mock_replies) {
  llm::RetryPolicy policy = config.llm.retry;
  policy.seed = config.seed;
  return llm::Gateway(make_transport(config, mock_replies), policy,
                      config.llm.requests_per_minute);
}

std::string to_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

template <typename T>
std::vector<T> read_jsonl(const fs::path& path) {
  std::vector<T> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_reports(const fs::path& dir, const std::string& stem, const Report& report) {
  write_report((dir / (stem + ".json")).string(), report, ReportFormat::kJson);
  write_report((dir / (stem + ".txt")).string(), report, ReportFormat::kText);
  write_report((dir / (stem + ".csv")).string(), report, ReportFormat::kCsv);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config.

void RunConfig::validate() const {
  if (run_id.empty()) throw ConfigError("run_id must not be empty");
  if (catalog_path.empty()) throw ConfigError("catalog.path is required");
  if (validation == ValidationKind::kOff && generator != GeneratorKind::kTemplate) {
    throw ConfigError("validation=off is only allowed with the template generator");
  }
  if (backend == BackendKind::kSim && sim_config_path.empty()) {
    throw ConfigError("backend.sim_config is required for the sim backend");
  }
  if (backend == BackendKind::kHttp && http.base_url.empty()) {
    throw ConfigError("backend.http.base_url is required for the http backend");
  }
  if (page_size < 1 || page_depth < 1) throw ConfigError("page_size and page_depth must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (partial_failure_threshold < 0.0 || partial_failure_threshold > 1.0) {
    throw ConfigError("partial_failure_threshold must be in [0, 1]");
  }
  if (template_rules.max_group_size < kMinGroupSize) {
    throw ConfigError("generator.max_group_size must be >= 2");
  }
  llm.retry.validate();
}

std::string RunConfig::digest() const {
  json j = digest_source;
  j["seed"] = seed;
  return sha256_hex(j.dump());
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    c.run_id = j.value("run_id", c.run_id);
    c.seed = j.value("seed", c.seed);
    c.out_dir = resolve(base_dir, j.value("out_dir", std::string("out")));

    const json& cat = j.at("catalog");
    c.catalog_path = resolve(base_dir, cat.at("path").get<std::string>());
    c.catalog_format = parse_catalog_format(cat.value("format", std::string("csv")));

    const json gen = j.value("generator", json::object());
    c.generator = parse_generator(gen.value("kind", std::string("template")));
    c.template_rules.max_group_size = gen.value("max_group_size", c.template_rules.max_group_size);
    c.template_rules.min_token_length =
        gen.value("min_token_length", c.template_rules.min_token_length);
    c.template_rules.abbreviation = gen.value("abbreviation", c.template_rules.abbreviation);
    c.template_rules.branch_location = gen.value("branch_location", c.template_rules.branch_location);
    c.prompt_template = gen.value("prompt_template", c.prompt_template);
    if (c.prompt_template != "english" && c.prompt_template != "chinese") {
      c.prompt_template = resolve(base_dir, c.prompt_template).string();
    }
    c.generator_mock_replies = resolve(base_dir, gen.value("mock_replies", std::string{}));

    const json val = j.value("validation", json::object());
    c.validation = parse_validation(val.value("kind", std::string("rule")));
    c.rule.max_query_length = val.value("max_query_length", c.rule.max_query_length);
    c.judge_mock_replies = resolve(base_dir, val.value("mock_replies", std::string{}));

    const json l = j.value("llm", json::object());
    if (l.contains("api_key")) {
      throw ConfigError("llm.api_key is not accepted; name an environment variable in llm.api_key_env");
    }
    c.llm.endpoint.base_url = l.value("base_url", std::string{});
    c.llm.endpoint.path = l.value("path", c.llm.endpoint.path);
    c.llm.endpoint.model = l.value("model", std::string{});
    c.llm.endpoint.api_key_env = l.value("api_key_env", std::string{});
    c.llm.retry.per_attempt_timeout = llm::Millis(l.value("timeout_ms", 30'000));
    c.llm.retry.max_retries = l.value("max_retries", 3);
    c.llm.retry.wait_min = llm::Millis(l.value("wait_min_ms", 500));
    c.llm.retry.wait_max = llm::Millis(l.value("wait_max_ms", 2'000));
    c.llm.requests_per_minute = l.value("requests_per_minute", 0.0);

    const json& be = j.at("backend");
    c.backend = parse_backend(be.value("kind", std::string("sim")));
    c.sim_config_path = resolve(base_dir, be.value("sim_config", std::string{}));
    if (be.contains("http")) c.http = http_profile_from_json(be.at("http"));

    const json ctx = j.value("context", json::object());
    c.account_id = ctx.value("account_id", c.account_id);
    c.page_size = ctx.value("page_size", c.page_size);
    c.page_depth = ctx.value("page_depth", c.page_depth);
    c.window = TimeWindow::parse(ctx.value("window", std::string("10:00-21:00")));
    c.gating = ctx.value("gating", c.gating);
    if (ctx.contains("timestamp")) {
      c.timestamp = LocalDateTime::parse(ctx.at("timestamp").get<std::string>());
    }

    c.workers = j.value("workers", c.workers);
    c.partial_failure_threshold = j.value("partial_failure_threshold", c.partial_failure_threshold);
    const json rep = j.value("report", json::object());
    c.confirmations = resolve(base_dir, rep.value("confirmations", std::string{}));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  c.digest_source = j;
  c.digest_source.erase("out_dir");
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Files.

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + path.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string() + ": " + ec.message());
}

std::vector<QueryGroup> read_groups(const fs::path& path) { return read_jsonl<QueryGroup>(path); }

std::vector<MissedRecallFinding> read_findings(const fs::path& path) {
  return read_jsonl<MissedRecallFinding>(path);
}

Catalog load_ingested_catalog(const RunConfig& config) {
  const fs::path path = config.out_dir / "catalog.json";
  if (!fs::exists(path)) throw IoError(path.string() + " not found; run the ingest stage first");
  auto parsed = parse_catalog(read_file(path), CatalogFormat::kJson, path.string());
  if (!parsed.rejected.empty()) throw ParseError(path.string() + " contains invalid rows");
  return parsed.catalog;
}

// ---------------------------------------------------------------------------
// Building blocks.

GenerationOutput generate_groups(const RunConfig& config, const Catalog& catalog) {
  std::vector<const Shop*> shops;
  for (const auto& s : catalog.shops) shops.push_back(&s);
  std::sort(shops.begin(), shops.end(), [](const Shop* a, const Shop* b) { return a->id < b->id; });

  std::vector<std::optional<QueryGroup>> groups(shops.size());
  std::vector<std::string> errors(shops.size());
  if (config.generator == GeneratorKind::kTemplate) {
    parallel_for(shops.size(), config.workers,
                 [&](std::size_t i) { groups[i] = generate_template(*shops[i], config.template_rules); });
  } else {
    const llm::PromptTemplate tmpl = llm::load_prompt_template(config.prompt_template);
    llm::Gateway gateway = make_gateway(config, config.generator_mock_replies);
    parallel_for(shops.size(), config.workers, [&](std::size_t i) {
      try {
        groups[i] = generate_llm(*shops[i], tmpl, gateway);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
  }
  GenerationOutput out;
  for (std::size_t i = 0; i < shops.size(); ++i) {
    if (groups[i]) {
      out.groups.push_back(std::move(*groups[i]));
    } else {
      out.failures.emplace_back(shops[i]->id, errors[i]);
    }
  }
  return out;
}

std::vector<GroupValidation> validate_groups(const RunConfig& config, const Catalog& catalog,
                                             const std::vector<QueryGroup>& groups) {
  const auto shops = shops_by_id(catalog);
  std::optional<llm::Gateway> gateway;
  if (config.validation == ValidationKind::kLlm) {
    gateway.emplace(make_gateway(config, config.judge_mock_replies));
  }
  std::vector<GroupValidation> out(groups.size());
  parallel_for(groups.size(), config.workers, [&](std::size_t gi) {
    const QueryGroup& g = groups[gi];
    GroupValidation& v = out[gi];
    if (config.validation == ValidationKind::kOff) {
      v.group = truncate_group(g, config.template_rules.max_group_size);
      return;
    }
    auto it = shops.find(g.target_shop_id);
    if (it == shops.end()) throw ContractError("group targets unknown shop " + g.target_shop_id);
    for (const auto& q : g.queries) {
      v.verdicts.push_back(config.validation == ValidationKind::kRule
                               ? validate_rule(*it->second, q, config.rule)
                               : validate_llm_cautious(*it->second, q, *gateway));
    }
    FilterResult filtered = filter_group(g, v.verdicts);
    v.group = truncate_group(filtered.group, config.template_rules.max_group_size);
    v.dropped = std::move(filtered.dropped);
  });
  return out;
}

std::unique_ptr<SearchBackend> make_backend(const RunConfig& config, const Catalog& catalog) {
  if (config.backend == BackendKind::kHttp) {
    return std::make_unique<HttpSearchBackend>(config.http);
  }
  json j;
  try {
    j = json::parse(read_file(config.sim_config_path));
  } catch (const json::parse_error& e) {
    throw ConfigError(config.sim_config_path.string() + ": " + e.what());
  }
  return std::make_unique<sim::Simulator>(catalog, sim::sim_config_from_json(j));
}

DetectionOutput detect(const RunConfig& config, const Catalog& catalog,
                       const std::vector<QueryGroup>& groups, SearchBackend& backend,
                       std::size_t n_generated, const LocalClock& clock) {
  const auto shops = shops_by_id(catalog);
  std::vector<QueryGroup> ordered = groups;
  std::stable_sort(ordered.begin(), ordered.end(), [](const QueryGroup& a, const QueryGroup& b) {
    return a.target_shop_id < b.target_shop_id;
  });

  DetectionOutput out;
  out.executed.resize(ordered.size());
  std::vector<AuditLog> audits(ordered.size());
  parallel_for(ordered.size(), config.workers, [&](std::size_t gi) {
    ExecutedGroup& eg = out.executed[gi];
    eg.group = ordered[gi];
    auto it = shops.find(eg.group.target_shop_id);
    if (it == shops.end()) throw ContractError("group targets unknown shop " + eg.group.target_shop_id);
    const Shop& target = *it->second;
    eg.context.account_id = config.account_id;
    eg.context.location = target.location;
    eg.context.timestamp = config.timestamp ? *config.timestamp : clock();
    eg.context.page_size = config.page_size;
    eg.context.page_depth = config.page_depth;
    const bool gated = config.gating && gate_time(eg.context, config.window) == GateResult::kGated;
    for (const auto& q : eg.group.queries) {
      ExecutedQuery eq;
      eq.text = q.text;
      if (gated) {
        eq.outcome = QueryOutcome::kGated;
      } else {
        Execution ex = execute(q, eg.context, backend, &audits[gi]);
        if (ex.status == ExecStatus::kExecuted) {
          const RecallCheck rc = recalled(ex.page, target);
          eq.outcome = rc.recalled ? QueryOutcome::kRecalled : QueryOutcome::kMissed;
          eq.match_mode = rc.mode;
        } else {
          eq.outcome = QueryOutcome::kUnexecuted;
          eq.error = ex.error;
        }
      }
      eg.queries.push_back(std::move(eq));
    }
  });
  for (const auto& a : audits) out.audit.merge(a);

  std::vector<GroupRun> runs;
  std::size_t gated_groups = 0;
  for (const auto& eg : out.executed) {
    GroupRun r;
    r.group = eg.group;
    r.context = eg.context;
    bool errored = false;
    bool gated = false;
    for (const auto& q : eg.queries) {
      r.outcomes.push_back(q.outcome);
      errored |= q.outcome == QueryOutcome::kUnexecuted;
      gated |= q.outcome == QueryOutcome::kGated;
    }
    out.error_groups += errored ? 1 : 0;
    gated_groups += gated ? 1 : 0;
    runs.push_back(std::move(r));
  }
  out.evaluation = evaluate_run(runs, config.run_id);

  Report& rep = out.report;
  rep.run_id = config.run_id;
  rep.config_digest = config.digest();
  rep.verdicts = out.evaluation.verdicts;
  rep.ledger.n_total = out.evaluation.tallies.executed_queries;
  rep.ledger.n_generated = n_generated;
  rep.ledger.findings = out.evaluation.findings;
  if (gated_groups > 0) {
    rep.warnings.push_back(std::to_string(gated_groups) +
                           " group(s) gated by the time window and excluded");
  }
  if (out.error_groups > 0) {
    rep.warnings.push_back(std::to_string(out.error_groups) +
                           " group(s) incomplete after backend errors");
  }
  for (const auto& e : out.evaluation.errors) rep.warnings.push_back(e);
  rep.metrics = compute_metrics(rep.ledger);
  return out;
}

InMemoryRun run_in_memory(const RunConfig& config, const Catalog& catalog, SearchBackend* backend,
                          const LocalClock& clock) {
  InMemoryRun run;
  run.generated = generate_groups(config, catalog).groups;
  run.validated = validate_groups(config, catalog, run.generated);
  std::vector<QueryGroup> groups;
  std::size_t n_generated = 0;
  for (const auto& g : run.generated) n_generated += g.queries.size();
  for (const auto& v : run.validated) groups.push_back(v.group);
  std::unique_ptr<SearchBackend> owned;
  if (backend == nullptr) {
    owned = make_backend(config, catalog);
    backend = owned.get();
  }
  run.detection = detect(config, catalog, groups, *backend, n_generated, clock);
  return run;
}

// ---------------------------------------------------------------------------
// File stages.

StageResult stage_ingest(const RunConfig& config) {
  StageResult r;
  const auto parsed = parse_catalog(read_file(config.catalog_path), config.catalog_format,
                                    config.catalog_path.filename().string());
  write_file(config.out_dir / "catalog.json", emit_catalog(parsed.catalog, CatalogFormat::kJson));
  json rejected = json::array();
  for (const auto& e : parsed.rejected) rejected.push_back({{"row", e.row}, {"reason", e.reason}});
  const json report = {{"source", parsed.catalog.source},
                       {"rows_in", parsed.rows_in},
                       {"accepted", parsed.catalog.shops.size()},
                       {"rejected", rejected}};
  write_file(config.out_dir / "ingest_report.json", report.dump(2) + "\n");
  r.messages.push_back("ingested " + std::to_string(parsed.catalog.shops.size()) + " of " +
                       std::to_string(parsed.rows_in) + " rows");
  if (!parsed.rejected.empty()) {
    r.messages.push_back(std::to_string(parsed.rejected.size()) +
                         " row(s) rejected, see ingest_report.json");
  }
  return r;
}

StageResult stage_generate(const RunConfig& config) {
  StageResult r;
  const Catalog catalog = load_ingested_catalog(config);
  const GenerationOutput gen = generate_groups(config, catalog);
  std::vector<json> rows;
  for (const auto& g : gen.groups) rows.push_back(g);
  write_file(config.out_dir / "groups.jsonl", to_jsonl(rows));
  std::vector<json> errs;
  for (const auto& [id, err] : gen.failures) errs.push_back({{"shop_id", id}, {"error", err}});
  write_file(config.out_dir / "generate_errors.jsonl", to_jsonl(errs));
  r.messages.push_back("generated " + std::to_string(gen.groups.size()) + " group(s)");
  if (!catalog.shops.empty() && gen.groups.empty()) {
    r.exit_code = kExitFatal;
    r.messages.push_back("generation failed for every shop");
    if (!gen.failures.empty()) r.messages.push_back("first error: " + gen.failures.front().second);
  } else if (!catalog.shops.empty()) {
    const double failed = static_cast<double>(gen.failures.size()) /
                          static_cast<double>(catalog.shops.size());
    if (failed > config.partial_failure_threshold) {
      r.exit_code = kExitPartial;
      r.messages.push_back(std::to_string(gen.failures.size()) + " shop(s) failed generation");
    }
  }
  return r;
}

StageResult stage_validate(const RunConfig& config) {
  StageResult r;
  const Catalog catalog = load_ingested_catalog(config);
  const auto groups = read_groups(config.out_dir / "groups.jsonl");
  const auto validated = validate_groups(config, catalog, groups);
  std::vector<json> kept;
  std::vector<json> verdicts;
  std::vector<json> drops;
  std::size_t n_dropped = 0;
  for (const auto& v : validated) {
    kept.push_back(v.group);
    verdicts.push_back({{"target_shop_id", v.group.target_shop_id}, {"verdicts", v.verdicts}});
    for (const auto& d : v.dropped) {
      json row = d;
      row["target_shop_id"] = v.group.target_shop_id;
      drops.push_back(std::move(row));
      ++n_dropped;
    }
  }
  write_file(config.out_dir / "validated.jsonl", to_jsonl(kept));
  write_file(config.out_dir / "verdicts.jsonl", to_jsonl(verdicts));
  write_file(config.out_dir / "drops.jsonl", to_jsonl(drops));
  r.messages.push_back("validated " + std::to_string(validated.size()) + " group(s), dropped " +
                       std::to_string(n_dropped) + " quer" + (n_dropped == 1 ? "y" : "ies"));
  return r;
}

namespace {

json executed_group_json(const ExecutedGroup& eg, const GroupVerdict& verdict) {
  json queries = json::array();
  for (const auto& q : eg.queries) {
    json row = {{"text", q.text},
                {"outcome", std::string(to_string(q.outcome))},
                {"match_mode", std::string(to_string(q.match_mode))}};
    if (!q.error.empty()) row["error"] = q.error;
    queries.push_back(std::move(row));
  }
  return {{"target_shop_id", eg.group.target_shop_id},
          {"classification", std::string(to_string(verdict.classification))},
          {"context", eg.context},
          {"queries", std::move(queries)}};
}

}  // namespace

StageResult stage_run(const RunConfig& config, const LocalClock& clock) {
  StageResult r;
  const Catalog catalog = load_ingested_catalog(config);
  const fs::path validated_path = config.out_dir / "validated.jsonl";
  if (!fs::exists(validated_path)) {
    throw IoError(validated_path.string() + " not found; run the validate stage first");
  }
  const auto groups = read_groups(validated_path);
  std::size_t n_generated = 0;
  const fs::path generated_path = config.out_dir / "groups.jsonl";
  for (const auto& g : read_groups(fs::exists(generated_path) ? generated_path : validated_path)) {
    n_generated += g.queries.size();
  }
  auto backend = make_backend(config, catalog);
  const DetectionOutput det = detect(config, catalog, groups, *backend, n_generated, clock);

  std::map<std::string, const GroupVerdict*> verdicts;
  for (const auto& v : det.evaluation.verdicts) verdicts[v.target_shop_id] = &v;
  std::vector<json> outcomes;
  for (const auto& eg : det.executed) {
    outcomes.push_back(executed_group_json(eg, *verdicts.at(eg.group.target_shop_id)));
  }
  std::vector<json> findings;
  for (const auto& f : det.evaluation.findings) findings.push_back(f);
  write_file(config.out_dir / "outcomes.jsonl", to_jsonl(outcomes));
  write_file(config.out_dir / "findings.jsonl", to_jsonl(findings));
  write_file(config.out_dir / "audit.jsonl", det.audit.to_jsonl());
  const json meta = {{"run_id", det.report.run_id},
                     {"config_digest", det.report.config_digest},
                     {"n_total", det.report.ledger.n_total},
                     {"n_generated", det.report.ledger.n_generated},
                     {"verdicts", det.report.verdicts},
                     {"warnings", det.report.warnings}};
  write_file(config.out_dir / "run_meta.json", meta.dump(2) + "\n");
  write_reports(config.out_dir, "report", det.report);

  r.messages.push_back("executed " + std::to_string(det.report.ledger.n_total) + " quer" +
                       (det.report.ledger.n_total == 1 ? "y" : "ies") + ", " +
                       std::to_string(det.evaluation.findings.size()) + " finding(s)");
  for (const auto& w : det.report.warnings) r.messages.push_back("warning: " + w);
  if (!det.executed.empty()) {
    const double failed = static_cast<double>(det.error_groups) /
                          static_cast<double>(det.executed.size());
    if (failed > config.partial_failure_threshold) r.exit_code = kExitPartial;
  }
  return r;
}

StageResult stage_report(const RunConfig& config) {
  StageResult r;
  const json meta = json::parse(read_file(config.out_dir / "run_meta.json"));
  Report rep;
  rep.run_id = meta.at("run_id").get<std::string>();
  rep.config_digest = meta.at("config_digest").get<std::string>();
  rep.verdicts = meta.at("verdicts").get<std::vector<GroupVerdict>>();
  rep.warnings = meta.at("warnings").get<std::vector<std::string>>();
  rep.ledger.n_total = meta.at("n_total").get<std::size_t>();
  rep.ledger.n_generated = meta.at("n_generated").get<std::size_t>();
  rep.ledger.findings = read_findings(config.out_dir / "findings.jsonl");
  if (!config.confirmations.empty()) {
    const auto ingest = ingest_confirmations(read_file(config.confirmations), rep.ledger);
    for (const auto& e : ingest.row_errors) {
      rep.warnings.push_back("confirmations row " + std::to_string(e.row) + ": " + e.reason);
    }
    for (const auto& w : ingest.warnings) rep.warnings.push_back(w);
    r.messages.push_back("applied " + std::to_string(ingest.applied) + " label(s)");
  } else {
    r.messages.push_back("no confirmations file; metrics are provisional");
  }
  rep.metrics = compute_metrics(rep.ledger);
  write_reports(config.out_dir, "final_report", rep);
  for (const auto& w : rep.warnings) r.messages.push_back("warning: " + w);
  r.messages.push_back(emit_report(rep, ReportFormat::kText));
  return r;
}

}  // namespace recallprobe::pipeline
