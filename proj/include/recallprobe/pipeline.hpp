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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "recallprobe/catalog.hpp"
#include "recallprobe/generation.hpp"
#include "recallprobe/llm.hpp"
#include "recallprobe/metrics.hpp"
#include "recallprobe/oracle.hpp"
#include "recallprobe/search.hpp"
#include "recallprobe/validation.hpp"

// Staged run orchestration. Each stage reads and writes files in the run's
// output directory:
//
//   ingest    catalog.json, ingest_report.json
//   generate  groups.jsonl, generate_errors.jsonl
//   validate  validated.jsonl, verdicts.jsonl, drops.jsonl
//   run       outcomes.jsonl, findings.jsonl, audit.jsonl, run_meta.json,
//             report.{json,txt,csv}
//   report    final_report.{json,txt,csv}
namespace recallprobe::pipeline {

enum class GeneratorKind { kTemplate, kLlm };
enum class ValidationKind { kRule, kLlm, kOff };
enum class BackendKind { kSim, kHttp };

struct LlmSettings {
  llm::EndpointConfig endpoint;
  llm::RetryPolicy retry;
  double requests_per_minute = 0.0;
};

struct RunConfig {
  std::string run_id = "run";
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";

  std::filesystem::path catalog_path;
  CatalogFormat catalog_format = CatalogFormat::kCsv;

  GeneratorKind generator = GeneratorKind::kTemplate;
  TemplateRules template_rules;
  std::string prompt_template = "english";  // "english", "chinese" or a path
  std::filesystem::path generator_mock_replies;

  ValidationKind validation = ValidationKind::kRule;
  RuleValidatorConfig rule;
  std::filesystem::path judge_mock_replies;

  LlmSettings llm;

  BackendKind backend = BackendKind::kSim;
  std::filesystem::path sim_config_path;
  HttpBackendProfile http;

  std::string account_id = "recallprobe";
  int page_size = 20;
  int page_depth = 1;
  TimeWindow window;
  bool gating = true;
  // Fixed search time; wall clock when absent.
  std::optional<LocalDateTime> timestamp;

  int workers = 1;
  // Fraction of failed shops (generate) or incomplete-by-error groups (run)
  // above which a stage exits with kExitPartial.
  double partial_failure_threshold = 0.0;

  std::filesystem::path confirmations;

  // The parsed file with out_dir removed; hashed into the report.
  nlohmann::json digest_source;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  std::string digest() const;
};

/// Parses a JSON config. Relative paths resolve against `base_dir`.
/// Credentials are never read from the file; `llm.api_key_env` names the
/// environment variable that holds them.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;

struct StageResult {
  int exit_code = kExitOk;
  std::vector<std::string> messages;
};

// In-memory building blocks shared by the file stages and run_in_memory().

struct GenerationOutput {
  std::vector<QueryGroup> groups;  // by shop id
  std::vector<std::pair<std::string, std::string>> failures;  // (shop id, error)
};

GenerationOutput generate_groups(const RunConfig& config, const Catalog& catalog);

struct GroupValidation {
  QueryGroup group;  // filtered and capped
  std::vector<ValidationVerdict> verdicts;
  std::vector<DroppedQuery> dropped;
};

std::vector<GroupValidation> validate_groups(const RunConfig& config, const Catalog& catalog,
                                             const std::vector<QueryGroup>& groups);

std::unique_ptr<SearchBackend> make_backend(const RunConfig& config, const Catalog& catalog);

struct ExecutedQuery {
  std::string text;
  QueryOutcome outcome = QueryOutcome::kUnexecuted;
  MatchMode match_mode = MatchMode::kId;
  std::string error;
};

struct ExecutedGroup {
  QueryGroup group;
  SearchContext context;
  std::vector<ExecutedQuery> queries;
};

struct DetectionOutput {
  std::vector<ExecutedGroup> executed;  // by shop id
  RunEvaluation evaluation;
  AuditLog audit;
  Report report;
  std::size_t error_groups = 0;  // groups with an unexecuted query
};

/// Gates, executes and evaluates every group; the report carries
/// provisional metrics with all findings pending.
DetectionOutput detect(const RunConfig& config, const Catalog& catalog,
                       const std::vector<QueryGroup>& groups, SearchBackend& backend,
                       std::size_t n_generated, const LocalClock& clock = LocalDateTime::now);

struct InMemoryRun {
  std::vector<QueryGroup> generated;
  std::vector<GroupValidation> validated;
  DetectionOutput detection;
};

/// generate -> validate -> detect without touching the output directory.
/// `backend` defaults to make_backend(config, catalog).
InMemoryRun run_in_memory(const RunConfig& config, const Catalog& catalog,
                          SearchBackend* backend = nullptr,
                          const LocalClock& clock = LocalDateTime::now);

// File stages.

StageResult stage_ingest(const RunConfig& config);
StageResult stage_generate(const RunConfig& config);
StageResult stage_validate(const RunConfig& config);
StageResult stage_run(const RunConfig& config, const LocalClock& clock = LocalDateTime::now);
StageResult stage_report(const RunConfig& config);

/// Loads the ingested catalog from the output directory.
Catalog load_ingested_catalog(const RunConfig& config);

std::vector<QueryGroup> read_groups(const std::filesystem::path& path);
std::vector<MissedRecallFinding> read_findings(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: temp file then rename.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace recallprobe::pipeline
