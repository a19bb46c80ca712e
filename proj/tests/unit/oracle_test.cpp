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

#include <algorithm>
#include <numeric>
#include <random>

#include "recallprobe/error.hpp"
#include "recallprobe/oracle.hpp"

namespace rp = recallprobe;

namespace {

rp::QueryGroup group_of(std::size_t n, const std::string& shop = "s1") {
  rp::QueryGroup g;
  g.target_shop_id = shop;
  for (std::size_t i = 0; i < n; ++i) {
    rp::TestQuery q;
    q.text = "q" + std::to_string(i);
    q.target_shop_id = shop;
    g.queries.push_back(q);
  }
  return g;
}

std::vector<bool> bits(unsigned mask, std::size_t n) {
  std::vector<bool> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1U;
  return y;
}

}  // namespace

TEST(Oracle, SpecExamples) {
  auto mixed = rp::evaluate_group(group_of(3), std::vector<bool>{true, true, false});
  EXPECT_EQ(mixed.verdict.classification, rp::Classification::kViolation);
  ASSERT_EQ(mixed.findings.size(), 1u);
  EXPECT_EQ(mixed.findings[0].witnesses.size(), 2u);
  EXPECT_EQ(mixed.findings[0].failing_query.text, "q2");

  auto none = rp::evaluate_group(group_of(3), std::vector<bool>{false, false, false});
  EXPECT_EQ(none.verdict.classification, rp::Classification::kSuppressedAllFalse);
  EXPECT_TRUE(none.findings.empty());

  auto all = rp::evaluate_group(group_of(2), std::vector<bool>{true, true});
  EXPECT_EQ(all.verdict.classification, rp::Classification::kConsistentAllTrue);
  EXPECT_TRUE(all.findings.empty());
}

TEST(Oracle, ArityMismatchIsContractError) {
  EXPECT_THROW(rp::evaluate_group(group_of(3), std::vector<bool>{true, false}), rp::ContractError);
}

TEST(Oracle, IneligibleAndIncomplete) {
  auto one = rp::evaluate_group(group_of(1), std::vector<bool>{false});
  EXPECT_EQ(one.verdict.classification, rp::Classification::kIneligible);
  std::vector<rp::QueryOutcome> gated = {rp::QueryOutcome::kRecalled, rp::QueryOutcome::kMissed,
                                         rp::QueryOutcome::kGated};
  auto inc = rp::evaluate_group(group_of(3), gated);
  EXPECT_EQ(inc.verdict.classification, rp::Classification::kIncomplete);
  EXPECT_TRUE(inc.findings.empty());
  std::vector<rp::QueryOutcome> broken = {rp::QueryOutcome::kMissed, rp::QueryOutcome::kUnexecuted};
  EXPECT_EQ(rp::evaluate_group(group_of(2), broken).verdict.classification,
            rp::Classification::kIncomplete);
}

// Exhaustive check against the pairwise definition: a violation exists iff
// some pair (i, j) disagrees.
TEST(Oracle, BruteForceAgainstPairwiseDefinition) {
  for (std::size_t n = 2; n <= 10; ++n) {
    const auto g = group_of(n);
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
      const auto y = bits(mask, n);
      bool disagree = false;
      for (std::size_t i = 0; i < n && !disagree; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (y[i] != y[j]) {
            disagree = true;
            break;
          }
        }
      }
      const auto falses = static_cast<std::size_t>(std::count(y.begin(), y.end(), false));
      const auto ev = rp::evaluate_group(g, y);
      const auto cls = ev.verdict.classification;
      if (disagree) {
        ASSERT_EQ(cls, rp::Classification::kViolation) << "n=" << n << " mask=" << mask;
        ASSERT_EQ(ev.findings.size(), falses);
        for (const auto& f : ev.findings) ASSERT_EQ(f.witnesses.size(), n - falses);
      } else if (falses == n) {
        ASSERT_EQ(cls, rp::Classification::kSuppressedAllFalse);
        ASSERT_TRUE(ev.findings.empty());
      } else {
        ASSERT_EQ(cls, rp::Classification::kConsistentAllTrue);
        ASSERT_TRUE(ev.findings.empty());
      }
    }
  }
}

TEST(Oracle, PermutationInvariance) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 8;
    auto g = group_of(n);
    const auto y = bits(static_cast<unsigned>(rng()), n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    rp::QueryGroup pg = g;
    std::vector<bool> py(n);
    for (std::size_t i = 0; i < n; ++i) {
      pg.queries[i] = g.queries[perm[i]];
      py[i] = y[perm[i]];
    }
    const auto a = rp::evaluate_group(g, y);
    const auto b = rp::evaluate_group(pg, py);
    ASSERT_EQ(a.verdict.classification, b.verdict.classification);
    ASSERT_EQ(a.findings.size(), b.findings.size());
    std::vector<std::string> fa, fb;
    for (const auto& f : a.findings) fa.push_back(f.failing_query.text);
    for (const auto& f : b.findings) fb.push_back(f.failing_query.text);
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    ASSERT_EQ(fa, fb);
  }
}

TEST(Oracle, FlippingFalseToTrueNeverAddsFindings) {
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto g = group_of(n);
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
      const auto y = bits(mask, n);
      const auto base = rp::evaluate_group(g, y);
      if (base.verdict.classification != rp::Classification::kViolation) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (y[i]) continue;
        auto flipped = y;
        flipped[i] = true;
        ASSERT_LE(rp::evaluate_group(g, flipped).findings.size(), base.findings.size());
      }
    }
  }
}

TEST(Oracle, FindingIdsAndContext) {
  nlohmann::json ctx = {{"account_id", "a"}};
  auto ev = rp::evaluate_group(group_of(3, "shop-7"), std::vector<bool>{false, true, false}, ctx, "r1");
  ASSERT_EQ(ev.findings.size(), 2u);
  EXPECT_EQ(ev.findings[0].finding_id, "shop-7#0");
  EXPECT_EQ(ev.findings[1].finding_id, "shop-7#2");
  EXPECT_EQ(ev.findings[0].run_id, "r1");
  EXPECT_EQ(ev.findings[0].context, ctx);
}

TEST(Oracle, RunComposition) {
  std::vector<rp::GroupRun> runs;
  auto mk = [](const std::string& shop, std::vector<rp::QueryOutcome> o) {
    rp::GroupRun r;
    r.group = group_of(o.size(), shop);
    r.outcomes = std::move(o);
    return r;
  };
  using O = rp::QueryOutcome;
  runs.push_back(mk("c", {O::kMissed, O::kMissed}));
  runs.push_back(mk("a", {O::kRecalled, O::kMissed, O::kMissed}));
  runs.push_back(mk("b", {O::kRecalled, O::kRecalled}));
  const auto ev = rp::evaluate_run(runs, "run");
  ASSERT_EQ(ev.verdicts.size(), 3u);
  EXPECT_EQ(ev.verdicts[0].target_shop_id, "a");
  EXPECT_EQ(ev.tallies.groups.at(rp::Classification::kViolation), 1u);
  EXPECT_EQ(ev.findings.size(), 2u);
  EXPECT_EQ(ev.tallies.finding_entries, 2u);
  EXPECT_EQ(ev.tallies.finding_shops, 1u);
  EXPECT_EQ(ev.tallies.executed_queries, 7u);

  EXPECT_TRUE(rp::evaluate_run({}).findings.empty());
}

TEST(Oracle, RunCollectsContractErrors) {
  rp::GroupRun bad;
  bad.group = group_of(3, "x");
  bad.outcomes = {rp::QueryOutcome::kMissed};
  const auto ev = rp::evaluate_run(std::vector<rp::GroupRun>{bad});
  EXPECT_EQ(ev.errors.size(), 1u);
  EXPECT_TRUE(ev.findings.empty());
}

TEST(Oracle, JsonRoundTrip) {
  auto ev = rp::evaluate_group(group_of(2, "s"), std::vector<bool>{true, false}, {{"k", 1}}, "r");
  nlohmann::json j = ev.findings[0];
  EXPECT_EQ(j.get<rp::MissedRecallFinding>(), ev.findings[0]);
  nlohmann::json v = ev.verdict;
  EXPECT_EQ(v.get<rp::GroupVerdict>(), ev.verdict);
}
