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

#include <gtest/gtest.h>

#include <random>

#include "chainplan/chain_rules.h"
#include "chainplan/network_state.h"
#include "corridor_fixture.h"

namespace chainplan {
namespace {

using testing::Corridor;
using testing::CorridorBlock;
using testing::CorridorR1;
using testing::Hm;

ValidationOptions Mode(CapacityMode mode) {
  ValidationOptions o;
  o.capacity = mode;
  return o;
}

TEST(ChainableTest, FollowsTimesAndGroups) {
  Corridor f;
  EXPECT_TRUE(Chainable(f.state, f.b1, f.b3));
  EXPECT_TRUE(Chainable(f.state, f.b1, f.b4));
  EXPECT_FALSE(Chainable(f.state, f.b3, f.b1));
  EXPECT_FALSE(Chainable(f.state, f.b1, f.b2));
}

TEST(ChainableTest, ForbiddenOverridesTime) {
  Corridor f;
  f.state.SetConnection(f.b1, f.b3, ConnectionKind::kForbidden);
  EXPECT_FALSE(Chainable(f.state, f.b1, f.b3));
  EXPECT_TRUE(Chainable(f.state, f.b1, f.b4));
}

TEST(ChainableTest, ExtraConnectionBypassesTime) {
  Corridor f;
  BlockSpec b3 = CorridorBlock("b3", {"s3"}, "RBL", "COS", Hm(7, 0), Hm(12, 30));
  f.state.UpsertBlock(b3);
  EXPECT_FALSE(Chainable(f.state, f.b1, f.b3));
  f.state.SetConnection(f.b1, f.b3, ConnectionKind::kExtra);
  EXPECT_TRUE(Chainable(f.state, f.b1, f.b3));
}

TEST(ChainableTest, ExclusiveRestrictsSuccessors) {
  Corridor f;
  f.state.SetConnection(f.b1, f.b4, ConnectionKind::kExclusive);
  EXPECT_FALSE(Chainable(f.state, f.b1, f.b3));
  EXPECT_TRUE(Chainable(f.state, f.b1, f.b4));
  EXPECT_TRUE(Chainable(f.state, f.b2, f.b3));
}

TEST(ChainableTest, UnknownBlockThrows) {
  Corridor f;
  EXPECT_THROW(Chainable(f.state, f.b1, 99), LookupError);
}

TEST(ChainableTest, IrreflexiveWithoutExtra) {
  Corridor f;
  for (BlockIndex b : {f.b1, f.b2, f.b3, f.b4}) {
    EXPECT_FALSE(Chainable(f.state, b, b));
  }
}

TEST(ChainableTest, OperationPointGroupsAllowTransfer) {
  NetworkState s;
  s.UpsertStation({"A", StationKind::kOperational, "", ""});
  s.UpsertStation({"Y-arr", StationKind::kOperational, "Y", ""});
  s.UpsertStation({"Y-dep", StationKind::kOperational, "Y", ""});
  s.UpsertStation({"B", StationKind::kOperational, "", ""});
  s.UpsertTrain("t1", std::vector<SegmentSpec>{{"a", "t1", "A", "Y-arr", 60, 120, {100, 100}}});
  s.UpsertTrain("t2", std::vector<SegmentSpec>{{"b", "t2", "Y-dep", "B", 200, 260, {100, 100}}});
  const BlockIndex x = s.UpsertBlock(CorridorBlock("x", {"a"}, "A", "Y-arr", 50, 130));
  const BlockIndex y = s.UpsertBlock(CorridorBlock("y", {"b"}, "Y-dep", "B", 190, 270));
  EXPECT_EQ(s.GroupOf(s.StationIndexOf("Y-arr")), s.GroupOf(s.StationIndexOf("Y-dep")));
  EXPECT_TRUE(Chainable(s, x, y));
}

TEST(LoopFreeTest, Examples) {
  Corridor f;
  const std::vector<BlockIndex> ok = {f.b1, f.b3};
  EXPECT_TRUE(IsLoopFree(f.state, ok));
  EXPECT_TRUE(IsLoopFree(f.state, {}));
  f.state.UpsertTrain("back", std::vector<SegmentSpec>{
                                  {"sb", "back", "RBL", "FBG", Hm(9, 0), Hm(11, 0), {4000, 3000}}});
  const BlockIndex back =
      f.state.UpsertBlock(CorridorBlock("b_back", {"sb"}, "RBL", "FBG", Hm(8, 30), Hm(11, 30)));
  const std::vector<BlockIndex> loop = {f.b1, back};
  EXPECT_FALSE(IsLoopFree(f.state, loop));
}

TEST(LoopFreeTest, PhaseConnectorAddsNoGroupButCannotRepeat) {
  Corridor f;
  BlockSpec pc = CorridorBlock("pc", {}, "RBL", "RBL", Hm(8, 0), Hm(8, 40));
  pc.phase_connector = true;
  const BlockIndex p = f.state.UpsertBlock(pc);
  const std::vector<BlockIndex> with_pc = {f.b1, p, f.b3};
  EXPECT_TRUE(IsLoopFree(f.state, with_pc));
  EXPECT_TRUE(Chainable(f.state, f.b1, p));
  EXPECT_TRUE(Chainable(f.state, p, f.b3));
  const std::vector<BlockIndex> twice = {f.b1, p, p, f.b3};
  EXPECT_FALSE(IsLoopFree(f.state, twice));
}

TEST(BlockAdmitsTest, AllowForbidAndMissingAttribute) {
  Corridor f;
  f.state.SetRestrictions(
      f.b3,
      {Restriction{RestrictionAttribute::kProductType, RestrictionMode::kAllow, {"express"}}});
  RequestSpec express = CorridorR1("rx");
  express.attributes["product-type"] = "express";
  RequestSpec standard = CorridorR1("rs");
  standard.attributes["product-type"] = "standard";
  RequestSpec fuel = CorridorR1("fuel");
  fuel.attributes["nhm-code"] = "2710";
  const RequestIndex r1 = f.state.AddRequest(CorridorR1());
  const RequestIndex rx = f.state.AddRequest(express);
  const RequestIndex rs = f.state.AddRequest(standard);
  const RequestIndex rf = f.state.AddRequest(fuel);
  const auto& st = f.state;
  EXPECT_TRUE(BlockAdmits(st, f.b3, st.request(rx)));
  EXPECT_FALSE(BlockAdmits(st, f.b3, st.request(rs)));
  EXPECT_FALSE(BlockAdmits(st, f.b3, st.request(r1)));
  EXPECT_TRUE(BlockAdmits(st, f.b1, st.request(rs)));

  f.state.SetRestrictions(
      f.b1, {Restriction{RestrictionAttribute::kNhmCode, RestrictionMode::kForbid, {"2710"}}});
  EXPECT_FALSE(BlockAdmits(st, f.b1, st.request(rf)));
  // A missing attribute never matches, not even a forbid filter.
  EXPECT_FALSE(BlockAdmits(st, f.b1, st.request(rx)));
}

TEST(BlockAdmitsTest, OriginRestrictionUsesStationId) {
  Corridor f;
  f.state.SetRestrictions(
      f.b1, {Restriction{RestrictionAttribute::kOrigin, RestrictionMode::kAllow, {"FBG"}}});
  const Request& r = f.state.request(f.state.AddRequest(CorridorR1()));
  EXPECT_TRUE(BlockAdmits(f.state, f.b1, r));
}

TEST(ValidateChainTest, CorridorOk) {
  Corridor f;
  const Request& r = f.state.request(f.state.AddRequest(CorridorR1()));
  EXPECT_TRUE(ValidateChain(f.state, r, f.Chain({f.b1, f.b3}), Mode(CapacityMode::kRespect)).ok());
}

TEST(ValidateChainTest, LateDeliveryFlagsLastBlock) {
  Corridor f;
  RequestSpec spec = CorridorR1();
  spec.delivery_latest = Hm(11, 0);
  const Request& r = f.state.request(f.state.AddRequest(spec));
  const auto result =
      ValidateChain(f.state, r, f.Chain({f.b1, f.b3}), Mode(CapacityMode::kRespect));
  ASSERT_EQ(result.violations.size(), 1u);
  EXPECT_EQ(result.violations[0].kind, ViolationKind::kTimeWindow);
  EXPECT_EQ(result.violations[0].position, 1);
}

TEST(ValidateChainTest, OversizedDemandFlagsFirstBlockOnly) {
  Corridor f;
  RequestSpec spec = CorridorR1();
  spec.demand = {4500, 600};
  const Request& r = f.state.request(f.state.AddRequest(spec));
  const auto result =
      ValidateChain(f.state, r, f.Chain({f.b1, f.b3}), Mode(CapacityMode::kRespect));
  ASSERT_EQ(result.violations.size(), 1u);
  EXPECT_TRUE(result.Has(ViolationKind::kCapacity, 0));
  EXPECT_TRUE(ValidateChain(f.state, r, f.Chain({f.b1, f.b3}), Mode(CapacityMode::kIgnore)).ok());
  EXPECT_TRUE(ValidateChain(f.state, r, f.Chain({f.b1, f.b3}), Mode(CapacityMode::kIsolated))
                  .Has(ViolationKind::kCapacity, 0));
}

TEST(ValidateChainTest, StructuralReasons) {
  Corridor f;
  const Request& r = f.state.request(f.state.AddRequest(CorridorR1()));
  auto v = ValidateChain(f.state, r, f.Chain({f.b1, f.b4}), Mode(CapacityMode::kIgnore));
  EXPECT_TRUE(v.Has(ViolationKind::kDestinationMismatch, 1));
  v = ValidateChain(f.state, r, f.Chain({f.b2, f.b3}), Mode(CapacityMode::kIgnore));
  EXPECT_TRUE(v.Has(ViolationKind::kOriginMismatch, 0));
  v = ValidateChain(f.state, r, f.Chain({f.b3, f.b1}), Mode(CapacityMode::kIgnore));
  EXPECT_TRUE(v.Has(ViolationKind::kNotChainable, 1));
  v = ValidateChain(f.state, r, f.Chain({}), Mode(CapacityMode::kIgnore));
  EXPECT_TRUE(v.Has(ViolationKind::kEmptyChain));
}

TEST(ValidateChainTest, RequiredPrefixToleratesGapsAndLoops) {
  Corridor f;
  const Request& r = f.state.request(f.state.AddRequest(CorridorR1()));
  // b3 before b1 is neither chainable nor time-consistent, but both are
  // required.
  auto v = ValidateChain(f.state, r, f.Chain({f.b2, f.b1, f.b3}, 2), Mode(CapacityMode::kRespect));
  EXPECT_TRUE(v.ok()) << v.violations.size();
  f.state.SetRestrictions(
      f.b2, {Restriction{RestrictionAttribute::kCustomer, RestrictionMode::kAllow, {"acme"}}});
  v = ValidateChain(f.state, r, f.Chain({f.b2, f.b1, f.b3}, 2), Mode(CapacityMode::kRespect));
  EXPECT_TRUE(v.Has(ViolationKind::kRestriction, 0));
  EXPECT_EQ(v.violations.size(), 1u);
}

TEST(ValidateChainTest, DegenerateRequest) {
  Corridor f;
  RequestSpec spec = CorridorR1();
  spec.destination = "FBG";
  const Request& r = f.state.request(f.state.AddRequest(spec));
  EXPECT_TRUE(ValidateChain(f.state, r, f.Chain({f.b1}), Mode(CapacityMode::kIgnore))
                  .Has(ViolationKind::kDegenerate));
}

TEST(AdjustedCapacityTest, Examples) {
  Corridor f;
  EXPECT_EQ(AdjustedSegmentCapacity(f.state, f.s1), (CapacityVector{4000, 3000}));

  RequestSpec heavy = CorridorR1("heavy");
  heavy.destination = "RBL";
  heavy.demand = {3500, 100};
  const RequestIndex h = f.state.AddRequest(heavy);
  f.state.SetChain(h, f.Chain({f.b1}), RequestStatus::kAssigned);
  f.state.SetReservation(f.b1, {1000, 0});
  EXPECT_EQ(AdjustedSegmentCapacity(f.state, f.s1).weight, 4500);

  f.state.UpdateRequest(h, [&] {
    RequestSpec light = heavy;
    light.demand = {1000, 100};
    return light;
  }());
  f.state.SetReservation(f.b1, {500, 0});
  EXPECT_EQ(AdjustedSegmentCapacity(f.state, f.s1).weight, 4000);
}

TEST(AdjustedCapacityTest, ReservationAboveCapacity) {
  Corridor f;
  f.state.SetReservation(f.b1, {5000, 0});
  EXPECT_EQ(AdjustedSegmentCapacity(f.state, f.s1).weight, 5000);
}

TEST(CapacityViewTest, ReservationsConsumeSharedSegment) {
  Corridor f;
  // b2 reserves 3500 dt on s2, leaving 500 dt there for b1.
  f.state.SetReservation(f.b2, {3500, 0});
  const Request& r = f.state.request(f.state.AddRequest(CorridorR1()));
  CapacityView view(f.state, CapacityMode::kRespect);
  EXPECT_FALSE(view.Admits(f.b1, r.demand));
  EXPECT_TRUE(view.Admits(f.b2, r.demand));
  EXPECT_TRUE(view.Admits(f.b1, {500, 0}));
}

TEST(NetworkStateTest, InvariantsRejectBadObjects) {
  Corridor f;
  EXPECT_THROW(f.state.UpsertSegment({"bad", "x", "FBG", "LQ", 100, 100, {1, 1}}), InvalidInput);
  EXPECT_THROW(f.state.UpsertBlock(CorridorBlock("bx", {"s1"}, "FBG", "LQ", Hm(4, 10), Hm(5, 0))),
               InvalidInput);
  EXPECT_THROW(f.state.UpsertBlock(CorridorBlock("bx", {"s1"}, "FBG", "LQ", Hm(3, 0), Hm(4, 10))),
               InvalidInput);
  EXPECT_THROW(f.state.UpsertBlock(CorridorBlock("bx", {"s1"}, "LQ", "LQ", Hm(3, 0), Hm(5, 0))),
               InvalidInput);
  EXPECT_THROW(f.state.UpsertBlock(CorridorBlock("bx", {}, "LQ", "LQ", Hm(3, 0), Hm(5, 0))),
               InvalidInput);
  EXPECT_THROW(f.state.UpsertBlock(CorridorBlock("bx", {"nope"}, "FBG", "LQ", 0, 10)), LookupError);
  RequestSpec bad = CorridorR1("bad");
  bad.delivery_latest = bad.pickup_earliest;
  EXPECT_THROW(f.state.AddRequest(bad), InvalidInput);
  const std::vector<SegmentSpec> broken = {{"x1", "t", "FBG", "LQ", 10, 20, {1, 1}},
                                           {"x2", "t", "RBL", "COS", 30, 40, {1, 1}}};
  EXPECT_THROW(f.state.UpsertTrain("t", broken), InvalidInput);
}

TEST(NetworkStateTest, CommercialStationsMapToOperational) {
  Corridor f;
  f.state.UpsertStation({"Felsberg", StationKind::kCommercial, "", "FBG"});
  EXPECT_EQ(f.state.GroupOf(f.state.StationIndexOf("Felsberg")),
            f.state.GroupOf(f.state.StationIndexOf("FBG")));
  f.state.UpsertStation({"Nowhere", StationKind::kCommercial, "", "XYZ"});
  EXPECT_THROW(f.state.GroupOf(f.state.StationIndexOf("Nowhere")), LookupError);
}

TEST(NetworkStateTest, DeleteTrainKillsBlocks) {
  Corridor f;
  const auto killed = f.state.DeleteTrain("50208");
  EXPECT_EQ(killed.size(), 2u);
  EXPECT_FALSE(f.state.block(f.b3).alive);
  EXPECT_TRUE(f.state.block(f.b1).alive);
  EXPECT_TRUE(f.state.SegmentBlocks(f.s3).empty());
}

TEST(NetworkStateTest, VersionCounters) {
  Corridor f;
  const auto v = f.state.version();
  const auto nv = f.state.network_version();
  const RequestIndex r = f.state.AddRequest(CorridorR1());
  EXPECT_GT(f.state.version(), v);
  EXPECT_EQ(f.state.network_version(), nv);
  f.state.SetChain(r, f.Chain({f.b1, f.b3}), RequestStatus::kAssigned);
  EXPECT_EQ(f.state.network_version(), nv);
  f.state.SetReservation(f.b1, {1, 1});
  EXPECT_GT(f.state.network_version(), nv);
}

// Random assignment churn: the incremental ledger always equals a full
// recomputation.
TEST(LedgerPropertyTest, IncrementalMatchesRecomputation) {
  Corridor f;
  std::mt19937_64 rng(11);
  const std::vector<TransportChain> chains = {f.Chain({f.b1, f.b3}), f.Chain({f.b1, f.b4}),
                                              f.Chain({f.b2, f.b3}), f.Chain({f.b1}),
                                              f.Chain({f.b4}),       f.Chain({})};
  std::vector<RequestIndex> ids;
  for (int i = 0; i < 20; ++i) {
    RequestSpec spec = CorridorR1("q" + std::to_string(i));
    spec.demand = {static_cast<std::int64_t>(rng() % 900), static_cast<std::int64_t>(rng() % 700)};
    ids.push_back(f.state.AddRequest(spec));
  }
  const RequestStatus statuses[] = {RequestStatus::kAssigned, RequestStatus::kPartial,
                                    RequestStatus::kManual, RequestStatus::kUnassigned,
                                    RequestStatus::kRejected};
  for (int step = 0; step < 2000; ++step) {
    const RequestIndex r = ids[rng() % ids.size()];
    const int op = static_cast<int>(rng() % 10);
    if (op < 7) {
      f.state.SetChain(r, chains[rng() % chains.size()], statuses[rng() % 5]);
    } else if (op < 9) {
      f.state.ClearChain(r);
    } else {
      RequestSpec spec = CorridorR1(f.state.request(r).id);
      spec.demand = {static_cast<std::int64_t>(rng() % 900), 5};
      if (f.state.request(r).alive) {
        f.state.UpdateRequest(r, spec);
      }
    }
    ASSERT_TRUE(f.state.LedgerConsistent()) << "step " << step;
  }
  f.state.CancelRequest(ids[0]);
  EXPECT_TRUE(f.state.LedgerConsistent());
}

// Removing the cause of a reported violation removes exactly that reason.
TEST(ValidationPropertyTest, ReasonsAreComplete) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Corridor f;
    const std::vector<BlockIndex> all = {f.b1, f.b2, f.b3, f.b4};
    for (BlockIndex b : all) {
      if (rng() % 3 == 0) {
        f.state.SetRestrictions(b, {Restriction{RestrictionAttribute::kCustomer,
                                                RestrictionMode::kAllow,
                                                {rng() % 2 ? "acme" : "zeta"}}});
      }
    }
    RequestSpec spec = CorridorR1();
    spec.attributes["customer"] = "acme";
    spec.pickup_earliest = Hm(2 + static_cast<int>(rng() % 3), 0);
    spec.delivery_latest = Hm(10 + static_cast<int>(rng() % 5), 0);
    spec.demand = {static_cast<std::int64_t>(3000 + rng() % 3000), 100};
    const RequestIndex ri = f.state.AddRequest(spec);
    TransportChain chain;
    const int len = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < len; ++i) chain.blocks.push_back(all[rng() % all.size()]);
    const auto base =
        ValidateChain(f.state, f.state.request(ri), chain, Mode(CapacityMode::kRespect));
    auto without = [](std::vector<Violation> v, ViolationKind kind) {
      std::erase_if(v, [&](const Violation& x) { return x.kind == kind; });
      return v;
    };
    if (base.Has(ViolationKind::kTimeWindow)) {
      RequestSpec relaxed = spec;
      relaxed.pickup_earliest = 0;
      relaxed.delivery_latest = Hm(48, 0);
      f.state.UpdateRequest(ri, relaxed);
      const auto after =
          ValidateChain(f.state, f.state.request(ri), chain, Mode(CapacityMode::kRespect));
      EXPECT_EQ(after.violations, without(base.violations, ViolationKind::kTimeWindow));
      f.state.UpdateRequest(ri, spec);
      ++checked;
    }
    if (base.Has(ViolationKind::kRestriction)) {
      for (BlockIndex b : all) f.state.SetRestrictions(b, {});
      const auto after =
          ValidateChain(f.state, f.state.request(ri), chain, Mode(CapacityMode::kRespect));
      EXPECT_EQ(after.violations, without(base.violations, ViolationKind::kRestriction));
      ++checked;
    } else if (base.Has(ViolationKind::kCapacity)) {
      for (const char* s : {"s1", "s2", "s3", "s4"}) {
        const Segment& seg = f.state.segment(f.state.SegmentIndexOf(s));
        f.state.UpsertSegment({seg.id,
                               seg.train,
                               f.state.station(seg.from).id,
                               f.state.station(seg.to).id,
                               seg.departure,
                               seg.arrival,
                               {100000, 100000}});
      }
      const auto after =
          ValidateChain(f.state, f.state.request(ri), chain, Mode(CapacityMode::kRespect));
      EXPECT_EQ(after.violations, without(base.violations, ViolationKind::kCapacity));
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

// Chains accepted in respect mode satisfy every structural property.
TEST(ValidationPropertyTest, AcceptedChainsAreSound) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    Corridor f;
    const std::vector<BlockIndex> all = {f.b1, f.b2, f.b3, f.b4};
    RequestSpec spec = CorridorR1();
    spec.demand = {static_cast<std::int64_t>(rng() % 5000), 100};
    const Request& r = f.state.request(f.state.AddRequest(spec));
    TransportChain chain;
    const int len = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < len; ++i) chain.blocks.push_back(all[rng() % all.size()]);
    if (!ValidateChain(f.state, r, chain, Mode(CapacityMode::kRespect)).ok()) continue;
    EXPECT_TRUE(IsLoopFree(f.state, chain.blocks));
    for (std::size_t i = 1; i < chain.size(); ++i) {
      EXPECT_TRUE(Chainable(f.state, chain.blocks[i - 1], chain.blocks[i]));
    }
    EXPECT_LE(r.pickup_earliest, f.state.block(chain.blocks.front()).boarding_cutoff);
    EXPECT_LE(f.state.block(chain.blocks.back()).deboarding_ready, r.delivery_latest);
    for (BlockIndex b : chain.blocks) {
      for (SegmentIndex s : f.state.block(b).segments) {
        EXPECT_TRUE(
            (f.state.SegmentUsage(s) + r.demand).FitsIn(AdjustedSegmentCapacity(f.state, s)));
      }
    }
  }
}

}  // namespace
}  // namespace chainplan
