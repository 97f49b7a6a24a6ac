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

#include "chainplan/engine.h"

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "chainplan/backend.h"
#include "chainplan/messages.h"
#include "corridor_fixture.h"
#include "revalidation_catalog.h"

namespace chainplan {
namespace {

using nlohmann::json;
using testing::CorridorInit;
using testing::CorridorR1;
using testing::CorridorRequest;
using testing::CorridorSegmentWith;
using testing::Hm;

std::vector<std::string> Ids(const NetworkState& s, const TransportChain& c) {
  std::vector<std::string> out;
  for (BlockIndex b : c.blocks) out.push_back(s.block(b).id);
  return out;
}

// ---- wire schema ----

TEST(InstantTest, RoundTrip) {
  EXPECT_EQ(ParseInstant("1970-01-01T00:00:00Z"), 0);
  EXPECT_EQ(ParseInstant("1970-01-01T12:30Z"), Hm(12, 30));
  EXPECT_EQ(ParseInstant("1970-01-02T00:00:00+00:00"), 1440);
  EXPECT_EQ(FormatInstant(Hm(12, 30)), "1970-01-01T12:30:00Z");
  const Minutes t = ParseInstant("2026-03-02T04:30:00Z");
  EXPECT_EQ(FormatInstant(t), "2026-03-02T04:30:00Z");
  EXPECT_EQ(FormatInstant(-1), "1969-12-31T23:59:00Z");
  for (Minutes m : {Minutes{0}, Minutes{59}, Minutes{123456789}, Minutes{-5000}}) {
    EXPECT_EQ(ParseInstant(FormatInstant(m)), m);
  }
}

TEST(InstantTest, RejectsMalformedAndNonUtc) {
  EXPECT_THROW(ParseInstant("yesterday"), InvalidInput);
  EXPECT_THROW(ParseInstant("2026-03-02T04:30:00+01:00"), InvalidInput);
  EXPECT_THROW(ParseInstant("2026-03-02T04:30:15Z"), InvalidInput);
  EXPECT_THROW(ParseInstant("2026-02-30T04:30:00Z"), InvalidInput);
  EXPECT_THROW(ParseInstant("2026-03-02T24:00:00Z"), InvalidInput);
}

TEST(MessageJsonTest, EveryKindRoundTrips) {
  const Message init = CorridorInit(true);
  std::vector<Message> all = {init};
  all.push_back(Message{std::get<InitState>(init.payload).trains.front()});
  all.push_back(Message{DeleteTrain{"50208"}, true});
  BlockUpdate del;
  del.block.id = "b3";
  del.deleted = true;
  all.push_back(Message{del});
  all.push_back(Message{BlockUpdate{std::get<InitState>(init.payload).blocks.front(), false}});
  all.push_back(Message{CorridorSegmentWith("s3", {1, 2})});
  all.push_back(Message{ConnectionSpec{"b1", "b3", ConnectionKind::kExclusive}});
  all.push_back(Message{ConnectionSpec{"b1", "b3", std::nullopt}});
  all.push_back(Message{RestrictionUpdate{
      "b3", {{RestrictionAttribute::kNhmCode, RestrictionMode::kAllow, {"1", "2"}}}}});
  all.push_back(Message{ReservationUpdate{"b3", {10, 20}}});
  RequestSpec r = CorridorR1();
  r.attributes["customer"] = "acme";
  r.product = "express";
  all.push_back(Message{BookRequest{r, true}});
  all.push_back(Message{BookRequest{r, false}});
  all.push_back(Message{UpdateRequest{r, true}});
  all.push_back(Message{CancelRequest{"r1"}});
  all.push_back(Message{ManualChain{"r1", {{"b1", "b3"}, 1}}});
  all.push_back(Message{TriggerCompute{}});
  for (const Message& m : all) {
    const json j = MessageToJson(m);
    const Message back = MessageFromJson(j);
    EXPECT_EQ(back.kind(), m.kind());
    EXPECT_EQ(back.defer, m.defer);
    EXPECT_EQ(MessageToJson(back), j) << j.dump();
  }
}

TEST(MessageJsonTest, RejectsBadInput) {
  EXPECT_THROW(MessageFromJson(json{{"kind", "launch-rocket"}}), InvalidInput);
  EXPECT_THROW(MessageFromJson(json{{"payload", json::object()}}), InvalidInput);
  EXPECT_THROW(MessageFromJson(json{{"kind", "delete-train"}, {"payload", json::object()}}),
               InvalidInput);
  EXPECT_THROW(MessageFromJson(json{{"kind", "delete-train"}, {"payload", {{"id", 7}}}}),
               InvalidInput);
  EXPECT_THROW(
      MessageFromJson(json{{"kind", "upsert-connection"},
                           {"payload", {{"from", "a"}, {"to", "b"}, {"kind", "teleport"}}}}),
      InvalidInput);
}

TEST(MessageJsonTest, ExportImportPreservesState) {
  Engine a;
  a.Process(CorridorInit(true));
  a.Process(Message{BookRequest{CorridorR1(), true}});
  a.Process(Message{ConnectionSpec{"b2", "b4", ConnectionKind::kExtra}});
  const Message snapshot{ExportState(a.state())};
  Engine b;
  b.Process(snapshot);
  EXPECT_EQ(MessageToJson(Message{ExportState(b.state())}), MessageToJson(snapshot));
  EXPECT_TRUE(b.state().LedgerConsistent());
  const Request& r = b.state().request(b.state().RequestIndexOf("r1"));
  EXPECT_EQ(r.status, RequestStatus::kAssigned);
  EXPECT_EQ(r.promised_arrival, Hm(12, 30));
}

// ---- messages ----

class EngineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ProductTable products;
    products.Set("express", 29 * 60);
    EngineConfig config;
    config.products = products;
    engine = std::make_unique<Engine>(config);
    engine->Process(CorridorInit(false));
  }
  const NetworkState& state() const { return engine->state(); }
  const Request& request(const std::string& id) const {
    return state().request(state().RequestIndexOf(id));
  }
  std::unique_ptr<Engine> engine;
};

TEST_F(EngineTest, BookingReturnsChainAndPromise) {
  const MessageEffects fx = engine->Process(Message{BookRequest{CorridorR1(), true}});
  ASSERT_TRUE(fx.booking.has_value());
  EXPECT_EQ(fx.booking->outcome, OutcomeKind::kRouted);
  EXPECT_EQ(Ids(state(), fx.booking->chain), (std::vector<std::string>{"b1", "b3"}));
  EXPECT_EQ(fx.booking->promised_arrival, Hm(12, 30));
  EXPECT_EQ(fx.booking->stage, AssignmentStage::kIsolatedBfs);

  // The follow-up shortening keeps the chain without a search.
  RequestSpec shorter = CorridorR1();
  shorter.delivery_latest = Hm(12, 30);
  const MessageEffects up = engine->Process(Message{UpdateRequest{shorter, true}});
  ASSERT_TRUE(up.revalidation.has_value());
  EXPECT_FALSE(up.revalidation->searched);
  EXPECT_EQ(up.revalidation->after, up.revalidation->before);
  EXPECT_EQ(request("r1").delivery_latest, Hm(12, 30));
  EXPECT_EQ(Ids(state(), request("r1").chain), (std::vector<std::string>{"b1", "b3"}));
}

TEST_F(EngineTest, BookingOutcomesDistinguishReasons) {
  RequestSpec heavy = CorridorR1("heavy");
  heavy.demand = {4500, 100};
  EXPECT_EQ(engine->Process(Message{BookRequest{heavy, true}}).booking->outcome,
            OutcomeKind::kNotRoutable);
  EXPECT_EQ(request("heavy").status, RequestStatus::kRejected);

  engine->Process(Message{BookRequest{CorridorRequest("a", 3000), true}});
  EXPECT_EQ(
      engine->Process(Message{BookRequest{CorridorRequest("b", 3000), true}}).booking->outcome,
      OutcomeKind::kNoCapacity);

  RequestSpec nowhere = CorridorR1("nowhere");
  nowhere.destination = "LQ";
  nowhere.origin = "COS";
  EXPECT_EQ(engine->Process(Message{BookRequest{nowhere, true}}).booking->outcome,
            OutcomeKind::kNotRoutable);
}

TEST_F(EngineTest, DeadlineFromProductTable) {
  RequestSpec r = CorridorR1();
  r.product = "express";
  engine->Process(Message{BookRequest{r, false}});
  EXPECT_EQ(request("r1").delivery_latest, Hm(3, 0) + 29 * 60);
  RequestSpec unknown = CorridorR1("r2");
  unknown.product = "slow";
  EXPECT_THROW(engine->Process(Message{BookRequest{unknown, false}}), InvalidInput);
  EXPECT_FALSE(state().FindRequest("r2").has_value());
}

TEST_F(EngineTest, RejectedMessageLeavesStateUntouched) {
  engine->Process(Message{BookRequest{CorridorR1(), true}});
  const std::uint64_t version = state().version();
  const json before = MessageToJson(Message{ExportState(state())});
  SegmentSpec bad = CorridorSegmentWith("s3", {1000, 1000});
  bad.to = "NOWHERE";
  EXPECT_THROW(engine->Process(Message{bad}), LookupError);
  EXPECT_THROW(engine->Process(Message{DeleteTrain{"99999"}}), LookupError);
  EXPECT_THROW(engine->Process(Message{ConnectionSpec{"b1", "zz", ConnectionKind::kExtra}}),
               LookupError);
  TrainSpec broken{"50208",
                   {CorridorSegmentWith("s3", {1, 1}), CorridorSegmentWith("s4", {-1, 1})}};
  EXPECT_THROW(engine->Process(Message{broken}), InvalidInput);
  EXPECT_THROW(engine->Process(Message{BookRequest{CorridorR1(), true}}), InvalidInput);
  EXPECT_THROW(engine->Process(Message{ManualChain{"r1", {{"b1", "nope"}, 0}}}), LookupError);
  EXPECT_EQ(state().version(), version);
  EXPECT_EQ(MessageToJson(Message{ExportState(state())}), before);
  EXPECT_EQ(engine->stats().rejected, 6);
}

TEST_F(EngineTest, InitStateResetsAndIsIdempotent) {
  engine->Process(Message{BookRequest{CorridorR1(), true}});
  engine->Process(CorridorInit(false));
  EXPECT_FALSE(state().FindRequest("r1").has_value());
  const json once = MessageToJson(Message{ExportState(state())});
  engine->Process(CorridorInit(false));
  EXPECT_EQ(MessageToJson(Message{ExportState(state())}), once);
  InitState bad = std::get<InitState>(CorridorInit(false).payload);
  bad.blocks.push_back(testing::CorridorBlock("bx", {"s9"}, "FBG", "LQ", 0, 10));
  EXPECT_THROW(engine->Process(Message{bad}), LookupError);
  EXPECT_EQ(MessageToJson(Message{ExportState(state())}), once);
}

TEST_F(EngineTest, DeferredMessagesWaitForTrigger) {
  engine->Process(Message{BookRequest{CorridorR1(), true}});
  const std::int64_t waves = engine->stats().waves;
  for (const auto& cap :
       {CapacityVector{600, 4000}, CapacityVector{700, 4000}, CapacityVector{500, 4000}}) {
    const MessageEffects fx = engine->Process(Message{CorridorSegmentWith("s3", cap), true});
    EXPECT_TRUE(fx.deferred);
    EXPECT_FALSE(fx.wave_due);
  }
  EXPECT_EQ(engine->stats().waves, waves);
  EXPECT_EQ(engine->stats().revalidated, 0);
  EXPECT_EQ(Ids(state(), request("r1").chain), (std::vector<std::string>{"b1", "b3"}));
  EXPECT_EQ(engine->parked(), 1u);
  engine->Process(Message{TriggerCompute{}});
  EXPECT_EQ(engine->stats().waves, waves + 1);
  EXPECT_EQ(engine->stats().revalidated, 1);
  EXPECT_EQ(request("r1").status, RequestStatus::kPartial);
  EXPECT_EQ(engine->parked(), 0u);
}

TEST_F(EngineTest, CapacityReductionAvoidsOverbooking) {
  engine->Process(Message{BookRequest{CorridorR1(), true}});
  const MessageEffects fx = engine->Process(Message{CorridorSegmentWith("s3", {500, 4000})});
  ASSERT_EQ(fx.affected.size(), 1u);
  EXPECT_EQ(fx.affected[0], state().RequestIndexOf("r1"));
  const SegmentIndex s3 = state().SegmentIndexOf("s3");
  EXPECT_TRUE(state().SegmentUsage(s3).FitsIn(state().segment(s3).capacity));
}

TEST_F(EngineTest, CancelFreesCapacity) {
  engine->Process(Message{BookRequest{CorridorRequest("a", 3000), true}});
  engine->Process(Message{CancelRequest{"a"}});
  EXPECT_EQ(
      engine->Process(Message{BookRequest{CorridorRequest("b", 3000), true}}).booking->outcome,
      OutcomeKind::kRouted);
  EXPECT_TRUE(state().LedgerConsistent());
}

TEST_F(EngineTest, ManualChainMayOverbookAndIsLeftAlone) {
  engine->Process(Message{BookRequest{CorridorRequest("a", 3000), true}});
  RequestSpec m = CorridorRequest("m", 3000);
  m.manual = true;
  EXPECT_FALSE(engine->Process(Message{BookRequest{m, true}}).booking->attempted);
  EXPECT_EQ(request("m").status, RequestStatus::kUnassigned);
  engine->Process(Message{ManualChain{"m", {{"b1", "b3"}, 2}}});
  EXPECT_EQ(request("m").status, RequestStatus::kManual);
  const SegmentIndex s3 = state().SegmentIndexOf("s3");
  EXPECT_FALSE(state().SegmentUsage(s3).FitsIn(state().segment(s3).capacity));
  // A change on s3 revalidates "a" against the manual usage; "a" gives way
  // and the manual chain stays.
  engine->Process(Message{CorridorSegmentWith("s3", {5000, 4000})});
  EXPECT_EQ(Ids(state(), request("m").chain), (std::vector<std::string>{"b1", "b3"}));
  EXPECT_EQ(request("m").status, RequestStatus::kManual);
  EXPECT_TRUE(request("a").chain.blocks.empty());
  EXPECT_TRUE(state().LedgerConsistent());
}

TEST_F(EngineTest, BlockReupsertMovesUsage) {
  engine->Process(Message{BookRequest{CorridorR1(), true}});
  BlockSpec b1 = testing::CorridorBlock("b1", {"s2"}, "LQ", "RBL", Hm(4, 15), Hm(8, 0));
  engine->Process(Message{BlockUpdate{b1, false}});
  EXPECT_TRUE(state().LedgerConsistent());
}

TEST_F(EngineTest, TrainReplacementKillsBlocksOnDroppedSegments) {
  engine->Process(Message{BookRequest{CorridorR1(), true}});
  TrainSpec shorter{"50208", {CorridorSegmentWith("s4", {5000, 4000})}};
  const MessageEffects fx = engine->Process(Message{shorter});
  EXPECT_FALSE(state().block(state().BlockIndexOf("b3")).alive);
  EXPECT_FALSE(state().block(state().BlockIndexOf("b4")).alive);
  EXPECT_EQ(fx.affected.size(), 1u);
  EXPECT_EQ(Ids(state(), request("r1").chain), (std::vector<std::string>{"b1"}));
  EXPECT_EQ(request("r1").status, RequestStatus::kPartial);
  EXPECT_TRUE(state().LedgerConsistent());
}

// ---- revalidation catalog ----

class CatalogTest : public ::testing::TestWithParam<testing::RevalidationCase> {};

TEST_P(CatalogTest, ProducesExpectedChains) {
  const auto problems = testing::RunRevalidationCase(GetParam());
  for (const auto& p : problems) ADD_FAILURE() << p;
}

INSTANTIATE_TEST_SUITE_P(Corridor, CatalogTest, ::testing::ValuesIn(testing::RevalidationCatalog()),
                         [](const auto& info) {
                           std::string name = info.param.name;
                           for (char& c : name) {
                             if (c == '-') c = '_';
                           }
                           return name;
                         });

// ---- dry runs ----

TEST_F(EngineTest, DryRunSearchIsPure) {
  engine->Process(Message{BookRequest{CorridorRequest("a", 1000), true}});
  const std::uint64_t version = state().version();
  const auto usage = state().RecomputeSegmentUsage();
  SearchOptions o;
  const SearchOutcome out = engine->DryRunSearch(CorridorR1(), true, o);
  ASSERT_EQ(out.chains.size(), 1u);
  EXPECT_EQ(Ids(state(), out.chains[0]), (std::vector<std::string>{"b1", "b3"}));
  EXPECT_EQ(state().version(), version);
  EXPECT_EQ(state().RecomputeSegmentUsage(), usage);
  EXPECT_FALSE(state().FindRequest("r1").has_value());
  EXPECT_EQ(engine->stats().dryrun_searches, 1);

  // Existing requests are searched without their own usage.
  RequestSpec big = CorridorRequest("big", 2500);
  ASSERT_EQ(engine->Process(Message{BookRequest{big, true}}).booking->outcome,
            OutcomeKind::kRouted);
  EXPECT_EQ(engine->DryRunSearch(state().RequestIndexOf("big"), o).chains.size(), 1u);
}

TEST_F(EngineTest, DryRunSearchReportsBlockingReasons) {
  RequestSpec heavy = CorridorR1();
  heavy.demand = {4500, 100};
  const SearchOutcome out = engine->DryRunSearch(heavy, true, SearchOptions{});
  EXPECT_TRUE(out.chains.empty());
  EXPECT_GT(out.diagnostics.Total(BlockingReason::kCapacity), 0);
}

TEST_F(EngineTest, ValidateManualChain) {
  const Request r1 = engine->ResolveForDryRun(CorridorR1(), true);
  const ValidationResult wrong = engine->DryRunValidate(r1, {{"b1", "b4"}, 0}, false);
  EXPECT_TRUE(wrong.Has(ViolationKind::kDestinationMismatch));
  EXPECT_TRUE(engine->DryRunValidate(r1, {{"b1", "b3"}, 0}, false).ok());
  // b1 -> b2 is not a transfer, tolerated inside a required prefix.
  EXPECT_TRUE(
      engine->DryRunValidate(r1, {{"b1", "b2", "b3"}, 0}, false).Has(ViolationKind::kNotChainable));
  EXPECT_TRUE(engine->DryRunValidate(r1, {{"b1", "b2", "b3"}, 0}, true).ok());
  EXPECT_THROW(engine->DryRunValidate(r1, {{"zz"}, 0}, false), LookupError);
  // Rejected calls are counted too.
  EXPECT_EQ(engine->stats().dryrun_validations, 5);
}

// ---- stats ----

TEST(EngineStatsTest, FreshIsZero) {
  Engine e;
  const json j = StatsToJson(e.stats());
  EXPECT_EQ(j["assignments"]["calls"], 0);
  for (const auto& [k, v] : j["api_calls"].items()) EXPECT_EQ(v, 0) << k;
  for (const auto& [k, v] : j["function_seconds"].items()) EXPECT_EQ(v, 0.0) << k;
}

TEST_F(EngineTest, StatsAfterOneBooking) {
  engine->Process(Message{BookRequest{CorridorR1(), true}});
  const EngineStats& s = engine->stats();
  EXPECT_EQ(s.assignments, 1);
  EXPECT_EQ(s.outcomes[static_cast<int>(OutcomeKind::kRouted)], 1);
  EXPECT_GT(s.stage_searches[0], 0);
  EXPECT_EQ(s.resolved_at[0], 1);
  EXPECT_EQ(s.messages[static_cast<int>(MessageKind::kBookRequest)], 1);
  EXPECT_EQ(s.messages[static_cast<int>(MessageKind::kInitState)], 1);
}

TEST_F(EngineTest, StatsAreMonotone) {
  std::mt19937_64 rng(11);
  json prev = StatsToJson(engine->stats());
  auto check = [](const json& a, const json& b, auto&& self) -> void {
    if (a.is_object()) {
      for (const auto& [k, v] : a.items()) self(v, b.at(k), self);
    } else {
      EXPECT_GE(b.get<double>(), a.get<double>());
    }
  };
  for (int i = 0; i < 40; ++i) {
    switch (rng() % 4) {
      case 0:
        engine->Process(Message{
            BookRequest{CorridorRequest("q" + std::to_string(i), 200 + rng() % 1500), true}});
        break;
      case 1:
        engine->Process(Message{
            CorridorSegmentWith("s3", {static_cast<std::int64_t>(1000 + rng() % 5000), 4000})});
        break;
      case 2:
        engine->DryRunSearch(CorridorR1("probe"), true, SearchOptions{});
        break;
      default:
        try {
          engine->Process(Message{DeleteTrain{"missing"}});
        } catch (const LookupError&) {
        }
    }
    const json now = StatsToJson(engine->stats());
    check(prev, now, check);
    prev = now;
  }
  EXPECT_TRUE(state().LedgerConsistent());
}

// ---- backend ----

TEST(BackendTest, InteractiveOvertakesBackground) {
  Backend backend;
  std::promise<void> gate;
  std::shared_future<void> open = gate.get_future().share();
  backend.Submit(Priority::kInteractive, [open](Engine&) { open.wait(); });
  std::mutex mu;
  std::vector<std::string> order;
  std::vector<std::future<void>> done;
  for (int i = 0; i < 5; ++i) {
    done.push_back(backend.Submit(Priority::kBackground, [&, i](Engine&) {
      std::lock_guard lock(mu);
      order.push_back("bg" + std::to_string(i));
    }));
  }
  done.push_back(backend.Submit(Priority::kInteractive, [&](Engine&) {
    std::lock_guard lock(mu);
    order.push_back("ui");
  }));
  gate.set_value();
  for (auto& f : done) f.get();
  EXPECT_EQ(order, (std::vector<std::string>{"ui", "bg0", "bg1", "bg2", "bg3", "bg4"}));
}

TEST(BackendTest, FailedTaskIsIsolated) {
  Backend backend;
  backend.Submit(Priority::kInteractive, [](Engine& e) { e.Process(CorridorInit(false)); }).get();
  auto bad = backend.Submit(Priority::kInteractive,
                            [](Engine&) -> int { throw std::runtime_error("boom"); });
  EXPECT_THROW(bad.get(), std::runtime_error);
  auto booked = backend.Submit(Priority::kInteractive, [](Engine& e) {
    return e.Process(Message{BookRequest{CorridorR1(), true}}).booking->outcome;
  });
  EXPECT_EQ(booked.get(), OutcomeKind::kRouted);
  backend.WaitIdle();
  const auto snap = backend.snapshot();
  EXPECT_EQ(snap->failed, 1);
  EXPECT_EQ(snap->executed_interactive, 3);
  EXPECT_EQ(snap->stats.assignments, 1);
}

TEST(BackendTest, ScheduledWavesCoalesce) {
  Backend backend;
  std::promise<void> gate;
  std::shared_future<void> open = gate.get_future().share();
  backend.Submit(Priority::kInteractive, [open](Engine& e) {
    e.Process(CorridorInit(false));
    open.wait();
  });
  for (int i = 0; i < 4; ++i) backend.ScheduleWave();
  gate.set_value();
  backend.WaitIdle();
  EXPECT_EQ(backend.snapshot()->stats.waves, 1);
  EXPECT_EQ(backend.snapshot()->executed_background, 1);
}

TEST(BackendTest, BackgroundIsNotStarved) {
  Backend backend;
  backend.Submit(Priority::kInteractive, [](Engine& e) { e.Process(CorridorInit(false)); }).get();
  std::atomic<bool> background_ran{false};
  auto bg = backend.Submit(Priority::kBackground, [&](Engine&) { background_ran = true; });
  // A steady trickle of interactive work still leaves gaps for the
  // background class.
  for (int i = 0; i < 50 && !background_ran; ++i) {
    backend.Submit(Priority::kInteractive, [](Engine& e) { e.RunWave(); }).get();
  }
  EXPECT_EQ(bg.wait_for(std::chrono::seconds(5)), std::future_status::ready);
}

}  // namespace
}  // namespace chainplan
