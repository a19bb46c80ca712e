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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recallprobe/catalog.hpp"
#include "recallprobe/oracle.hpp"

namespace recallprobe {

enum class Label { kConfirmed, kFalsePositive, kPending };

std::string_view to_string(Label l);
Label parse_label(std::string_view s);

/// Everything a round of testing produced that the metrics depend on.
struct RunLedger {
  std::size_t n_total = 0;      // executed queries
  std::size_t n_generated = 0;  // queries produced before validation/gating
  std::vector<MissedRecallFinding> findings;
  std::map<std::string, Label> labels;  // finding id -> label; absent = pending

  Label label_of(std::string_view finding_id) const;
};

/// A ratio that may be undefined; undefined values carry a reason instead of
/// a sentinel number.
struct MetricValue {
  std::optional<double> value;
  std::string undefined_reason;

  bool defined() const { return value.has_value(); }
};

struct RunMetrics {
  std::size_t n_total = 0;
  std::size_t reported_entries = 0;
  std::size_t reported_shops = 0;
  std::size_t confirmed_entries = 0;
  std::size_t confirmed_shops = 0;
  std::size_t false_positive_entries = 0;
  std::size_t pending_entries = 0;
  MetricValue false_positive_ratio;    // (reported - confirmed) / reported
  MetricValue test_case_efficiency;    // n_total / confirmed
  bool provisional = false;            // some labels still pending
};

/// Entry-wise ratios from raw counts.
RunMetrics metrics_from_counts(std::size_t n_reported, std::size_t n_confirmed,
                               std::size_t n_total);

/// Pending labels count as unconfirmed and mark the result provisional.
RunMetrics compute_metrics(const RunLedger& ledger);

struct ConfirmationIngest {
  std::size_t applied = 0;
  std::vector<RowError> row_errors;
  std::vector<std::string> warnings;
};

/// Merges a `finding_id,label,annotator,notes` CSV into the ledger. Unknown
/// ids are row errors; a repeated id keeps the last label and warns when
/// the labels disagree.
ConfirmationIngest ingest_confirmations(std::string_view csv_bytes, RunLedger& ledger);

enum class ReportFormat { kJson, kCsv, kText };

ReportFormat parse_report_format(std::string_view s);

struct Report {
  std::string run_id;
  std::string config_digest;
  std::vector<GroupVerdict> verdicts;
  RunLedger ledger;
  RunMetrics metrics;
  std::vector<std::string> warnings;
};

/// Deterministic rendering: stable ordering, ratios with three decimals.
std::string emit_report(const Report& report, ReportFormat format);

/// Writes emit_report() to `path`; throws IoError when the file cannot be
/// written.
void write_report(const std::string& path, const Report& report, ReportFormat format);

std::string format_fixed3(double v);

nlohmann::json metrics_to_json(const RunMetrics& m);

}  // namespace recallprobe
