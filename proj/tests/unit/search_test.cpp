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
#include <thread>

#include "httplib.h"
#include "recallprobe/error.hpp"
#include "recallprobe/search.hpp"

namespace rp = recallprobe;

namespace {

rp::SearchContext ctx_at(const std::string& ts) {
  rp::SearchContext c;
  c.account_id = "acct";
  c.location = {116.4, 39.9};
  c.timestamp = rp::LocalDateTime::parse(ts);
  c.page_size = 3;
  return c;
}

class FixedBackend : public rp::SearchBackend {
 public:
  explicit FixedBackend(std::vector<rp::ResultEntry> entries) : entries_(std::move(entries)) {}
  rp::BackendResponse search(const rp::SearchRequest& request) override {
    last = request;
    return {entries_, rp::encode_search_response(entries_)};
  }
  rp::SearchRequest last;

 private:
  std::vector<rp::ResultEntry> entries_;
};

class FailingBackend : public rp::SearchBackend {
 public:
  rp::BackendResponse search(const rp::SearchRequest&) override {
    throw rp::BackendError("HTTP 503");
  }
};

rp::Shop target(std::string id, std::string name) {
  rp::Shop s;
  s.id = std::move(id);
  s.name = std::move(name);
  return s;
}

}  // namespace

TEST(Gate, WindowBoundaries) {
  const auto w = rp::TimeWindow::parse("10:00-21:00");
  EXPECT_EQ(rp::gate_time(ctx_at("2024-06-01T14:30"), w), rp::GateResult::kOk);
  EXPECT_EQ(rp::gate_time(ctx_at("2024-06-01T09:59"), w), rp::GateResult::kGated);
  EXPECT_EQ(rp::gate_time(ctx_at("2024-06-01T10:00"), w), rp::GateResult::kOk);
  EXPECT_EQ(rp::gate_time(ctx_at("2024-06-01T21:00"), w), rp::GateResult::kGated);
  EXPECT_THROW(rp::TimeWindow::parse("21:00-10:00"), rp::ConfigError);
}

TEST(Time, ParseAndFormat) {
  const auto t = rp::LocalDateTime::parse("2024-06-01 14:30:05");
  EXPECT_EQ(t.minute_of_day(), 14 * 60 + 30);
  EXPECT_EQ(rp::LocalDateTime::parse(t.to_string()), t);
  EXPECT_THROW(rp::LocalDateTime::parse("yesterday"), rp::ConfigError);
}

TEST(Execute, TruncatesAndRecordsAudit) {
  FixedBackend be({{"a", "A", 3}, {"b", "B", 2}, {"c", "C", 1}, {"d", "D", 0}});
  rp::AuditLog audit;
  const auto ex = rp::execute({"coffee", "a"}, ctx_at("2024-06-01T14:30"), be, &audit);
  ASSERT_EQ(ex.status, rp::ExecStatus::kExecuted);
  EXPECT_EQ(ex.page.entries.size(), 3u);
  EXPECT_EQ(ex.page.query, "coffee");
  EXPECT_EQ(be.last.account_id, "acct");
  EXPECT_EQ(be.last.page_size, 3);
  EXPECT_FALSE(ex.page.raw_response.empty());
  ASSERT_EQ(audit.entries().size(), 1u);
  EXPECT_EQ(audit.entries()[0].at("response_sha256").get<std::string>().size(), 64u);
}

TEST(Execute, EmptyPageAndBackendFailure) {
  FixedBackend empty({});
  const auto ex = rp::execute({"coffee", "a"}, ctx_at("2024-06-01T14:30"), empty);
  EXPECT_EQ(ex.status, rp::ExecStatus::kExecuted);
  EXPECT_FALSE(rp::recalled(ex.page, target("a", "A")).recalled);

  FailingBackend bad;
  const auto failed = rp::execute({"coffee", "a"}, ctx_at("2024-06-01T14:30"), bad);
  EXPECT_EQ(failed.status, rp::ExecStatus::kUnexecuted);
  EXPECT_NE(failed.error.find("503"), std::string::npos);
}

TEST(Recalled, IdAndNameModes) {
  rp::SearchResultPage page;
  page.entries = {{"s1", "One", 1}, {"s2", "Two", 0.5}};
  EXPECT_TRUE(rp::recalled(page, target("s2", "x")).recalled);
  EXPECT_EQ(rp::recalled(page, target("s2", "x")).mode, rp::MatchMode::kId);
  EXPECT_FALSE(rp::recalled(page, target("s3", "One")).recalled);

  rp::SearchResultPage by_name;
  by_name.entries = {{"", "Chen's Hardware", 1}};
  const auto rc = rp::recalled(by_name, target("zz", "chen's  hardware"));
  EXPECT_TRUE(rc.recalled);
  EXPECT_EQ(rc.mode, rp::MatchMode::kNormalizedName);

  EXPECT_FALSE(rp::recalled(rp::SearchResultPage{}, target("s1", "One")).recalled);
}

TEST(Recalled, OrderIndependent) {
  rp::SearchResultPage a, b;
  a.entries = {{"s1", "One", 1}, {"s2", "Two", 0.5}, {"s3", "Three", 0.1}};
  b.entries = {a.entries[2], a.entries[0], a.entries[1]};
  for (const auto* id : {"s1", "s2", "s3", "s4"}) {
    EXPECT_EQ(rp::recalled(a, target(id, "")).recalled, rp::recalled(b, target(id, "")).recalled);
  }
}

TEST(Wire, RequestRoundTrip) {
  rp::SearchRequest r{"coffee", {116.4, 39.9}, "acct", "2024-06-01T14:30:00", 20};
  EXPECT_EQ(rp::decode_search_request(rp::encode_search_request(r)), r);
  const auto j = rp::encode_search_request(r);
  for (const auto* k : {"query", "lon", "lat", "account_id", "timestamp", "page_size"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

TEST(Wire, ProfileFieldMapping) {
  rp::HttpBackendProfile p;
  p.results_field = "shops";
  p.id_field = "";
  p.name_field = "title";
  const auto resp = rp::decode_search_response(R"({"shops":[{"title":"A"},{"title":"B"}]})", p);
  ASSERT_EQ(resp.entries.size(), 2u);
  EXPECT_EQ(resp.entries[1].shop_name, "B");
  EXPECT_TRUE(resp.entries[0].shop_id.empty());
  EXPECT_THROW(rp::decode_search_response("{\"other\":1}", p), rp::BackendError);
  EXPECT_THROW(rp::decode_search_response("nope", p), rp::BackendError);
}

TEST(Http, BackendOverSocket) {
  httplib::Server server;
  server.Post("/search", [](const httplib::Request& req, httplib::Response& res) {
    const auto r = rp::decode_search_request(nlohmann::json::parse(req.body));
    if (r.query == "boom") {
      res.status = 500;
      return;
    }
    res.set_content(rp::encode_search_response({{"s1", r.query, 1.0}}), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  rp::HttpBackendProfile p;
  p.base_url = "http://127.0.0.1:" + std::to_string(port);
  rp::HttpSearchBackend backend(p);
  const auto ok = rp::execute({"coffee", "s1"}, ctx_at("2024-06-01T14:30"), backend);
  ASSERT_EQ(ok.status, rp::ExecStatus::kExecuted);
  EXPECT_EQ(ok.page.entries[0].shop_name, "coffee");
  EXPECT_EQ(rp::execute({"boom", "s1"}, ctx_at("2024-06-01T14:30"), backend).status,
            rp::ExecStatus::kUnexecuted);
  server.stop();
  th.join();
  EXPECT_EQ(rp::execute({"coffee", "s1"}, ctx_at("2024-06-01T14:30"), backend).status,
            rp::ExecStatus::kUnexecuted);
}

TEST(Audit, MergeRestampsSequence) {
  rp::AuditLog a, b;
  rp::SearchRequest r{"q", {0, 0}, "x", "2024-06-01T14:30:00", 1};
  a.append(r, "executed", "{}");
  b.append(r, "executed", "{}");
  b.append(r, "unexecuted", "");
  a.merge(b);
  const auto e = a.entries();
  ASSERT_EQ(e.size(), 3u);
  for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(e[i].at("seq"), i);
  const std::string lines = a.to_jsonl();
  EXPECT_EQ(std::count(lines.begin(), lines.end(), '\n'), 3);
}

TEST(Context, JsonRoundTripAndValidate) {
  auto c = ctx_at("2024-06-01T14:30");
  nlohmann::json j = c;
  const auto back = j.get<rp::SearchContext>();
  EXPECT_EQ(back.timestamp, c.timestamp);
  EXPECT_EQ(back.page_size, 3);
  c.page_depth = 0;
  EXPECT_THROW(c.validate(), rp::ConfigError);
}
