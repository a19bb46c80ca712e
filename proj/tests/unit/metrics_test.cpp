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

#include "recallprobe/error.hpp"
#include "recallprobe/metrics.hpp"

namespace rp = recallprobe;

namespace {

rp::MissedRecallFinding finding(const std::string& shop, std::size_t idx) {
  rp::MissedRecallFinding f;
  f.finding_id = rp::finding_id(shop, idx);
  f.target_shop_id = shop;
  f.failing_query.text = "q" + std::to_string(idx);
  f.failing_query.target_shop_id = shop;
  f.witnesses.push_back({"w", shop});
  return f;
}

// Independent oracle for the two ratios.
double rfp(double reported, double confirmed) { return (reported - confirmed) / reported; }
double etc(double total, double confirmed) { return total / confirmed; }

}  // namespace

TEST(Metrics, PublishedRows) {
  struct Row {
    std::size_t reported, confirmed, total;
    double rfp, etc;
  };
  // Rows whose printed fractions and values agree at three decimals.
  for (const Row& r : {Row{35, 6, 2607, 0.829, 434.500}, Row{54, 32, 3803, 0.407, 118.844},
                       Row{118, 101, 6396, 0.144, 63.327}}) {
    const auto m = rp::metrics_from_counts(r.reported, r.confirmed, r.total);
    ASSERT_TRUE(m.false_positive_ratio.defined());
    ASSERT_TRUE(m.test_case_efficiency.defined());
    EXPECT_NEAR(*m.false_positive_ratio.value, r.rfp, 0.0005);
    EXPECT_NEAR(*m.test_case_efficiency.value, r.etc, 0.001);
    EXPECT_DOUBLE_EQ(*m.false_positive_ratio.value, rfp(r.reported, r.confirmed));
    EXPECT_DOUBLE_EQ(*m.test_case_efficiency.value, etc(r.total, r.confirmed));
  }
}

TEST(Metrics, GptRowRatios) {
  const auto m = rp::metrics_from_counts(47, 46, 3724);
  EXPECT_NEAR(*m.false_positive_ratio.value, 0.021, 0.0005);
  // 3724/46 = 80.9565...; the table prints it cut to two decimals.
  EXPECT_NEAR(*m.test_case_efficiency.value, 3724.0 / 46.0, 1e-12);
  EXPECT_EQ(rp::format_fixed3(*m.test_case_efficiency.value), "80.957");
  EXPECT_EQ(rp::format_fixed3(*m.false_positive_ratio.value), "0.021");
}

TEST(Metrics, UndefinedCases) {
  const auto none = rp::metrics_from_counts(0, 0, 100);
  EXPECT_FALSE(none.false_positive_ratio.defined());
  EXPECT_FALSE(none.false_positive_ratio.undefined_reason.empty());
  EXPECT_FALSE(none.test_case_efficiency.defined());
  const auto unconfirmed = rp::metrics_from_counts(5, 0, 100);
  EXPECT_DOUBLE_EQ(*unconfirmed.false_positive_ratio.value, 1.0);
  EXPECT_FALSE(unconfirmed.test_case_efficiency.defined());
}

TEST(Metrics, Properties) {
  for (std::size_t reported = 1; reported <= 30; ++reported) {
    for (std::size_t confirmed = 1; confirmed <= reported; ++confirmed) {
      const std::size_t total = reported * 7 + 3;
      const auto m = rp::metrics_from_counts(reported, confirmed, total);
      const double r = *m.false_positive_ratio.value;
      ASSERT_GE(r, 0.0);
      ASSERT_LE(r, 1.0);
      ASSERT_GE(*m.test_case_efficiency.value,
                static_cast<double>(total) / static_cast<double>(reported));
    }
  }
}

TEST(Metrics, LedgerCountsEntriesAndShops) {
  rp::RunLedger ledger;
  ledger.n_total = 40;
  ledger.findings = {finding("a", 0), finding("a", 2), finding("b", 1)};
  ledger.labels["a#0"] = rp::Label::kConfirmed;
  ledger.labels["a#2"] = rp::Label::kConfirmed;
  ledger.labels["b#1"] = rp::Label::kFalsePositive;
  const auto m = rp::compute_metrics(ledger);
  EXPECT_EQ(m.reported_entries, 3u);
  EXPECT_EQ(m.reported_shops, 2u);
  EXPECT_EQ(m.confirmed_entries, 2u);
  EXPECT_EQ(m.confirmed_shops, 1u);
  EXPECT_FALSE(m.provisional);
  EXPECT_NEAR(*m.false_positive_ratio.value, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(*m.test_case_efficiency.value, 20.0, 1e-12);
  EXPECT_LE(m.reported_shops, m.reported_entries);
  EXPECT_LE(m.confirmed_shops, m.confirmed_entries);
}

TEST(Metrics, PendingIsProvisional) {
  rp::RunLedger ledger;
  ledger.n_total = 10;
  ledger.findings = {finding("a", 0), finding("b", 0)};
  ledger.labels["a#0"] = rp::Label::kConfirmed;
  const auto m = rp::compute_metrics(ledger);
  EXPECT_TRUE(m.provisional);
  EXPECT_EQ(m.pending_entries, 1u);
  EXPECT_EQ(m.confirmed_entries, 1u);
}

TEST(Metrics, IngestConfirmations) {
  rp::RunLedger ledger;
  ledger.findings = {finding("a", 0), finding("a", 1), finding("b", 0)};
  const auto full = rp::ingest_confirmations(
      "finding_id,label,annotator,notes\na#0,confirmed,x,\na#1,false_positive,x,\nb#0,confirmed,y,ok\n",
      ledger);
  EXPECT_EQ(full.applied, 3u);
  EXPECT_TRUE(full.row_errors.empty());
  for (const auto& f : ledger.findings) EXPECT_NE(ledger.label_of(f.finding_id), rp::Label::kPending);

  const auto unknown = rp::ingest_confirmations("finding_id,label,annotator,notes\nzz#9,confirmed,x,\n", ledger);
  ASSERT_EQ(unknown.row_errors.size(), 1u);
  EXPECT_EQ(unknown.applied, 0u);

  const auto dup = rp::ingest_confirmations(
      "finding_id,label,annotator,notes\nb#0,confirmed,x,\nb#0,false_positive,y,\n", ledger);
  EXPECT_EQ(ledger.label_of("b#0"), rp::Label::kFalsePositive);
  EXPECT_EQ(dup.warnings.size(), 1u);
}

TEST(Metrics, ReportFormats) {
  rp::Report rep;
  rep.run_id = "r";
  rep.config_digest = "d";
  rep.metrics = rp::metrics_from_counts(47, 46, 3724);
  const std::string text = rp::emit_report(rep, rp::ReportFormat::kText);
  EXPECT_NE(text.find("0.021"), std::string::npos);
  EXPECT_NE(text.find("80.957"), std::string::npos);
  EXPECT_EQ(text, rp::emit_report(rep, rp::ReportFormat::kText));

  rp::Report empty;
  empty.run_id = "e";
  empty.metrics = rp::compute_metrics(empty.ledger);
  const auto j = nlohmann::json::parse(rp::emit_report(empty, rp::ReportFormat::kJson));
  EXPECT_TRUE(j.at("findings").empty());
  EXPECT_TRUE(j.at("metrics").at("r_fp").at("value").is_null());
  EXPECT_FALSE(j.at("metrics").at("r_fp").at("reason").get<std::string>().empty());
  EXPECT_FALSE(rp::emit_report(empty, rp::ReportFormat::kCsv).empty());
}

TEST(Metrics, WriteReportToBadPathThrows) {
  rp::Report rep;
  EXPECT_THROW(rp::write_report("/nonexistent-dir/x/report.json", rep, rp::ReportFormat::kJson),
               rp::IoError);
}

TEST(Metrics, ParseLabel) {
  EXPECT_EQ(rp::parse_label("confirmed"), rp::Label::kConfirmed);
  EXPECT_EQ(rp::parse_label("false_positive"), rp::Label::kFalsePositive);
  EXPECT_EQ(rp::parse_label("pending"), rp::Label::kPending);
  EXPECT_THROW(rp::parse_label("maybe"), rp::ParseError);
}
