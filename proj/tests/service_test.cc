// Copyright 2026 The Chainplan Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "service.h"

#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <regex>
#include <thread>

#include "chainplan/messages.h"
#include "revalidation_catalog.h"

namespace chainplan {
namespace {

using nlohmann::json;
using testing::CorridorInit;
using testing::CorridorR1;
using testing::CorridorSegmentWith;

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { Start({}); }
  void TearDown() override { Stop(); }

  void Start(service::ServiceOptions options) {
    options.engine.products.Set("express", 29 * 60);
    service_ = std::make_unique<service::Service>(std::move(options));
    // A stopped server does not come back up; each start gets its own.
    server_ = std::make_unique<httplib::Server>();
    service_->Mount(*server_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void Stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    service_.reset();
  }

  std::pair<int, json> Call(const std::string& method, const std::string& path,
                            const std::string& body = "") {
    httplib::Result res;
    if (method == "GET") {
      res = client_->Get(path);
    } else if (method == "POST") {
      res = client_->Post(path, body, "application/json");
    } else if (method == "PUT") {
      res = client_->Put(path, body, "application/json");
    } else {
      res = client_->Delete(path);
    }
    EXPECT_TRUE(res) << method << ' ' << path;
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body)};
  }
  std::pair<int, json> Call(const std::string& method, const std::string& path, const json& body) {
    return Call(method, path, body.dump());
  }

  void Init(bool late = false) {
    const json payload = MessageToJson(CorridorInit(late)).at("payload");
    ASSERT_EQ(Call("POST", "/state/init", payload).first, 200);
  }
  std::uint64_t Version() { return Call("GET", "/stats").second["state"]["version"]; }

  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<service::Service> service_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

void ExpectErrorBody(const json& j) {
  ASSERT_TRUE(j.contains("code") && j.contains("reason") && j.contains("details")) << j.dump();
  EXPECT_TRUE(j["code"].is_number_integer());
  EXPECT_TRUE(j["reason"].is_string());
  EXPECT_TRUE(j["details"].is_array());
}

TEST_F(ServiceTest, Health) {
  const auto [status, j] = Call("GET", "/health");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_TRUE(std::regex_match(j["time"].get<std::string>(),
                               std::regex(R"(\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ)")));
}

TEST_F(ServiceTest, BookingAndShortening) {
  Init();
  const auto [status, booking] = Call("POST", "/requests", RequestSpecToJson(CorridorR1()));
  EXPECT_EQ(status, 201);
  EXPECT_EQ(booking["outcome"], "routed");
  EXPECT_EQ(booking["chain"]["blocks"], json({"b1", "b3"}));
  EXPECT_EQ(booking["promised_arrival"], "1970-01-01T12:30:00Z");

  json shorter = RequestSpecToJson(CorridorR1());
  shorter["delivery_latest"] = booking["promised_arrival"];
  const auto [st2, up] = Call("PUT", "/requests/r1", shorter);
  EXPECT_EQ(st2, 200);
  EXPECT_EQ(up["revalidation"]["searched"], false);
  EXPECT_EQ(up["revalidation"]["after"]["blocks"], json({"b1", "b3"}));

  EXPECT_EQ(Call("PUT", "/requests/r2", shorter).first, 400);
  EXPECT_EQ(Call("DELETE", "/requests/r1").first, 200);
  const auto [st3, err] = Call("DELETE", "/requests/r1");
  EXPECT_EQ(st3, 404);
  ExpectErrorBody(err);
}

TEST_F(ServiceTest, BookingWithoutDeadlineUsesProduct) {
  Init();
  json r = RequestSpecToJson(CorridorR1(), false);
  r["product"] = "express";
  const auto [status, booking] = Call("POST", "/requests", r);
  EXPECT_EQ(status, 201);
  EXPECT_EQ(booking["outcome"], "routed");
}

TEST_F(ServiceTest, NotRoutableIsReported) {
  Init();
  RequestSpec heavy = CorridorR1();
  heavy.demand = {4500, 100};
  const auto [status, booking] = Call("POST", "/requests", RequestSpecToJson(heavy));
  EXPECT_EQ(status, 201);
  EXPECT_EQ(booking["outcome"], "not-routable");
  EXPECT_EQ(booking["status"], "rejected");
}

TEST_F(ServiceTest, ErrorsUseTheErrorBody) {
  Init();
  const std::uint64_t v = Version();
  auto [s1, e1] = Call("POST", "/requests", std::string("{not json"));
  EXPECT_EQ(s1, 400);
  ExpectErrorBody(e1);
  EXPECT_EQ(e1["reason"], "malformed-json");
  auto [s2, e2] = Call("POST", "/messages?defer=maybe", json::array());
  EXPECT_EQ(s2, 400);
  ExpectErrorBody(e2);
  auto [s3, e3] = Call("POST", "/messages", json::array({{{"kind", "nope"}}}));
  EXPECT_EQ(s3, 400);
  ExpectErrorBody(e3);
  EXPECT_EQ(Version(), v);
}

TEST_F(ServiceTest, MessagesReportPerItemRejections) {
  Init();
  Call("POST", "/requests", RequestSpecToJson(CorridorR1()));
  const std::uint64_t v = Version();
  const json batch = {MessageToJson(Message{DeleteTrain{"99999"}}),
                      MessageToJson(Message{CorridorSegmentWith("s4", {5000, 4000})})};
  const auto [status, j] = Call("POST", "/messages", batch);
  EXPECT_EQ(status, 200);
  EXPECT_EQ(j["rejected"], 1);
  EXPECT_EQ(j["results"][0]["error"]["reason"], "unknown-reference");
  ExpectErrorBody(j["results"][0]["error"]);
  EXPECT_EQ(j["results"][1]["kind"], "upsert-segment");
  EXPECT_GT(Version(), v);
}

TEST_F(ServiceTest, DeferredBatchThenTrigger) {
  Init();
  Call("POST", "/requests", RequestSpecToJson(CorridorR1()));
  const json batch = {MessageToJson(Message{CorridorSegmentWith("s3", {600, 4000})}),
                      MessageToJson(Message{CorridorSegmentWith("s3", {700, 4000})}),
                      MessageToJson(Message{CorridorSegmentWith("s3", {500, 4000})})};
  const auto [status, j] = Call("POST", "/messages?defer=true", batch);
  EXPECT_EQ(status, 200);
  for (const json& r : j["results"]) {
    EXPECT_TRUE(r["deferred"].get<bool>());
    EXPECT_FALSE(r.contains("wave"));
  }
  const json before = Call("GET", "/stats").second;
  EXPECT_EQ(before["stats"]["revalidation"]["waves"], 0);
  EXPECT_EQ(before["state"]["parked_revalidations"], 1);
  const auto [st2, fx] = Call("POST", "/compute/trigger");
  EXPECT_EQ(st2, 200);
  ASSERT_EQ(fx["wave"]["revalidated"].size(), 1u);
  EXPECT_EQ(fx["wave"]["revalidated"][0]["after"]["blocks"], json({"b1"}));
  EXPECT_EQ(fx["wave"]["revalidated"][0]["status"], "partial");
  EXPECT_EQ(Call("GET", "/stats").second["stats"]["revalidation"]["waves"], 1);
}

TEST_F(ServiceTest, DryRunsArePure) {
  Init();
  const std::uint64_t v = Version();
  const auto [status, j] =
      Call("POST", "/dryrun/search", json{{"request", RequestSpecToJson(CorridorR1())}});
  EXPECT_EQ(status, 200);
  ASSERT_EQ(j["chains"].size(), 1u);
  EXPECT_EQ(j["chains"][0]["blocks"], json({"b1", "b3"}));
  EXPECT_EQ(j["chains"][0]["arrival"], "1970-01-01T12:30:00Z");

  RequestSpec heavy = CorridorR1();
  heavy.demand = {4500, 100};
  const json blocked =
      Call("POST", "/dryrun/search", json{{"request", RequestSpecToJson(heavy)}}).second;
  EXPECT_TRUE(blocked["chains"].empty());
  EXPECT_GT(blocked["infeasibility"]["blocked"]["capacity"], 0);

  const auto [s2, v2] = Call(
      "POST", "/dryrun/validate-chain",
      json{{"request", RequestSpecToJson(CorridorR1())}, {"chain", {{"blocks", {"b1", "b4"}}}}});
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(v2["ok"], false);
  bool mismatch = false;
  for (const json& viol : v2["violations"]) mismatch |= viol["reason"] == "destination-mismatch";
  EXPECT_TRUE(mismatch) << v2.dump();
  EXPECT_EQ(Version(), v);
  EXPECT_EQ(Call("POST", "/dryrun/search", json{{"request_id", "nobody"}}).first, 404);
}

TEST_F(ServiceTest, StatsShape) {
  const json fresh = Call("GET", "/stats").second;
  EXPECT_EQ(fresh["stats"]["assignments"]["calls"], 0);
  Init();
  Call("POST", "/requests", RequestSpecToJson(CorridorR1()));
  const json j = Call("GET", "/stats").second;
  EXPECT_EQ(j["stats"]["assignments"]["calls"], 1);
  EXPECT_EQ(j["state"]["requests"], 1);
  EXPECT_EQ(j["queue"]["failed"], 0);
}

TEST_F(ServiceTest, RecordedLogReplaysToTheSameState) {
  Stop();
  const auto path = std::filesystem::temp_directory_path() / "chainplan_service_record.ndjson";
  service::ServiceOptions options;
  options.record_path = path.string();
  Start(options);
  Init(true);
  Call("POST", "/requests", RequestSpecToJson(testing::CorridorRequest("ra", 2000)));
  Call("POST", "/requests", RequestSpecToJson(testing::CorridorRequest("rb", 2000, "LT")));
  Call("POST", "/messages",
       json{MessageToJson(Message{CorridorSegmentWith("s3", {3000, 4000})}),
            MessageToJson(Message{DeleteTrain{"nope"}})});
  Call("POST", "/requests", RequestSpecToJson(testing::CorridorRequest("rc", 1500)));
  const json live = Call("GET", "/stats").second;
  json exported;
  service_->backend()
      .Submit(Priority::kInteractive,
              [&](Engine& e) { exported = MessageToJson(Message{ExportState(e.state())}); })
      .get();
  Stop();

  EngineConfig config;
  config.products.Set("express", 29 * 60);
  Engine replay(config);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    try {
      replay.Process(MessageFromJson(json::parse(line)));
    } catch (const LookupError&) {
    }
  }
  EXPECT_EQ(lines, 6);
  EXPECT_EQ(MessageToJson(Message{ExportState(replay.state())}), exported);
  EXPECT_EQ(StatsToJson(replay.stats())["assignments"]["outcomes"],
            live["stats"]["assignments"]["outcomes"]);
  std::filesystem::remove(path);
  Start({});
}

}  // namespace
}  // namespace chainplan
