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

#include "recallprobe/metrics.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "recallprobe/error.hpp"
#include "recallprobe/text.hpp"

namespace recallprobe {

std::string_view to_string(Label l) {
  switch (l) {
    case Label::kConfirmed: return "confirmed";
    case Label::kFalsePositive: return "false_positive";
    case Label::kPending: return "pending";
  }
  return "pending";
}

Label parse_label(std::string_view s) {
  const std::string k = text::fold_key(s);
  if (k == "confirmed") return Label::kConfirmed;
  if (k == "false_positive") return Label::kFalsePositive;
  if (k == "pending") return Label::kPending;
  throw ParseError("unknown label: " + std::string(s));
}

Label RunLedger::label_of(std::string_view finding_id) const {
  auto it = labels.find(std::string(finding_id));
  return it == labels.end() ? Label::kPending : it->second;
}

namespace {

void fill_ratios(RunMetrics& m) {
  if (m.reported_entries == 0) {
    m.false_positive_ratio = {std::nullopt, "no findings reported"};
  } else {
    m.false_positive_ratio = {
        static_cast<double>(m.reported_entries - m.confirmed_entries) /
            static_cast<double>(m.reported_entries),
        {}};
  }
  if (m.confirmed_entries == 0) {
    m.test_case_efficiency = {std::nullopt, "no confirmed findings"};
  } else {
    m.test_case_efficiency = {
        static_cast<double>(m.n_total) / static_cast<double>(m.confirmed_entries), {}};
  }
}

}  // namespace

RunMetrics metrics_from_counts(std::size_t n_reported, std::size_t n_confirmed,
                               std::size_t n_total) {
  if (n_confirmed > n_reported) throw ContractError("more confirmed than reported findings");
  RunMetrics m;
  m.n_total = n_total;
  m.reported_entries = n_reported;
  m.confirmed_entries = n_confirmed;
  fill_ratios(m);
  return m;
}

RunMetrics compute_metrics(const RunLedger& ledger) {
  RunMetrics m;
  m.n_total = ledger.n_total;
  std::set<std::string> reported_shops;
  std::set<std::string> confirmed_shops;
  for (const auto& f : ledger.findings) {
    ++m.reported_entries;
    reported_shops.insert(f.target_shop_id);
    switch (ledger.label_of(f.finding_id)) {
      case Label::kConfirmed:
        ++m.confirmed_entries;
        confirmed_shops.insert(f.target_shop_id);
        break;
      case Label::kFalsePositive: ++m.false_positive_entries; break;
      case Label::kPending: ++m.pending_entries; break;
    }
  }
  m.reported_shops = reported_shops.size();
  m.confirmed_shops = confirmed_shops.size();
  m.provisional = m.pending_entries > 0;
  fill_ratios(m);
  return m;
}

ConfirmationIngest ingest_confirmations(std::string_view csv_bytes, RunLedger& ledger) {
  if (!text::is_valid_utf8(csv_bytes)) throw ParseError("confirmations file is not valid UTF-8");
  auto records = csv::split(csv_bytes);
  if (records.empty()) throw ParseError("confirmations file has no header");
  const auto& header = records.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (text::fold_key(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("finding_id");
  const auto label_col = column("label");
  if (!id_col || !label_col) throw ParseError("confirmations need finding_id and label columns");

  std::set<std::string> known;
  for (const auto& f : ledger.findings) known.insert(f.finding_id);

  ConfirmationIngest result;
  std::map<std::string, Label> seen_in_file;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() <= std::max(*id_col, *label_col)) {
      result.row_errors.push_back({r, "too few fields"});
      continue;
    }
    const std::string id = text::trim(rec[*id_col]);
    if (!known.contains(id)) {
      result.row_errors.push_back({r, "unknown finding id: " + id});
      continue;
    }
    Label label;
    try {
      label = parse_label(text::trim(rec[*label_col]));
    } catch (const ParseError& e) {
      result.row_errors.push_back({r, e.what()});
      continue;
    }
    if (auto it = seen_in_file.find(id); it != seen_in_file.end() && it->second != label) {
      result.warnings.push_back("conflicting labels for " + id + ": " +
                                std::string(to_string(it->second)) + " then " +
                                std::string(to_string(label)) + "; keeping the last");
    }
    seen_in_file[id] = label;
    ledger.labels[id] = label;
    ++result.applied;
  }
  return result;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "text" || s == "text-summary") return ReportFormat::kText;
  throw ConfigError("unknown report format: " + std::string(s));
}

std::string format_fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

namespace {

nlohmann::json metric_json(const MetricValue& v) {
  if (v.defined()) return {{"value", format_fixed3(*v.value)}, {"defined", true}};
  return {{"value", nullptr}, {"defined", false}, {"reason", v.undefined_reason}};
}

std::string metric_text(const MetricValue& v) {
  return v.defined() ? format_fixed3(*v.value) : "undefined (" + v.undefined_reason + ")";
}

std::map<Classification, std::size_t> count_classes(const std::vector<GroupVerdict>& verdicts) {
  std::map<Classification, std::size_t> counts;
  for (auto c : {Classification::kConsistentAllTrue, Classification::kSuppressedAllFalse,
                 Classification::kViolation, Classification::kIneligible,
                 Classification::kIncomplete}) {
    counts[c] = 0;
  }
  for (const auto& v : verdicts) ++counts[v.classification];
  return counts;
}

}  // namespace

nlohmann::json metrics_to_json(const RunMetrics& m) {
  return {{"n_total", m.n_total},
          {"reported_entries", m.reported_entries},
          {"reported_shops", m.reported_shops},
          {"confirmed_entries", m.confirmed_entries},
          {"confirmed_shops", m.confirmed_shops},
          {"false_positive_entries", m.false_positive_entries},
          {"pending_entries", m.pending_entries},
          {"provisional", m.provisional},
          {"r_fp", metric_json(m.false_positive_ratio)},
          {"e_tc", metric_json(m.test_case_efficiency)}};
}

std::string emit_report(const Report& report, ReportFormat format) {
  const auto counts = count_classes(report.verdicts);
  switch (format) {
    case ReportFormat::kJson: {
      nlohmann::json groups = nlohmann::json::object();
      for (const auto& [c, n] : counts) groups[std::string(to_string(c))] = n;
      nlohmann::json findings = nlohmann::json::array();
      for (const auto& f : report.ledger.findings) {
        nlohmann::json fj = f;
        fj["label"] = std::string(to_string(report.ledger.label_of(f.finding_id)));
        findings.push_back(std::move(fj));
      }
      nlohmann::json doc{{"run_id", report.run_id},
                         {"config_digest", report.config_digest},
                         {"group_verdict_counts", std::move(groups)},
                         {"n_generated", report.ledger.n_generated},
                         {"findings", std::move(findings)},
                         {"metrics", metrics_to_json(report.metrics)},
                         {"warnings", report.warnings}};
      return doc.dump(2) + "\n";
    }
    case ReportFormat::kCsv: {
      std::ostringstream out;
      out << "finding_id,target_shop_id,failing_query,witnesses,label\n";
      for (const auto& f : report.ledger.findings) {
        std::vector<std::string> w;
        for (const auto& q : f.witnesses) w.push_back(q.text);
        out << csv::escape(f.finding_id) << ',' << csv::escape(f.target_shop_id) << ','
            << csv::escape(f.failing_query.text) << ',' << csv::escape(text::join(w, " | "))
            << ',' << to_string(report.ledger.label_of(f.finding_id)) << '\n';
      }
      return out.str();
    }
    case ReportFormat::kText: {
      const auto& m = report.metrics;
      std::ostringstream out;
      out << "run: " << report.run_id << "\n";
      out << "config digest: " << report.config_digest << "\n";
      out << "groups:";
      for (const auto& [c, n] : counts) out << ' ' << to_string(c) << '=' << n;
      out << "\n";
      out << "queries generated: " << report.ledger.n_generated << "\n";
      out << "queries executed (N_total): " << m.n_total << "\n";
      out << "reported: " << m.reported_entries << " entries / " << m.reported_shops
          << " shops\n";
      out << "confirmed: " << m.confirmed_entries << " entries / " << m.confirmed_shops
          << " shops\n";
      out << "false positives: " << m.false_positive_entries << ", pending: " << m.pending_entries
          << (m.provisional ? " (provisional)" : "") << "\n";
      out << "R_fp: " << metric_text(m.false_positive_ratio) << "\n";
      out << "E_tc: " << metric_text(m.test_case_efficiency) << "\n";
      for (const auto& f : report.ledger.findings) {
        out << "finding " << f.finding_id << " [" << to_string(report.ledger.label_of(f.finding_id))
            << "]: '" << f.failing_query.text << "' missed " << f.target_shop_id << "\n";
      }
      for (const auto& w : report.warnings) out << "warning: " << w << "\n";
      return out.str();
    }
  }
  return {};
}

void write_report(const std::string& path, const Report& report, ReportFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write report to " + path);
  out << emit_report(report, format);
  if (!out) throw IoError("failed writing report to " + path);
}

}  // namespace recallprobe
