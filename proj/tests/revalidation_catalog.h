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

// Scripted network changes on the two-train fixture and the chains they
// must leave behind. The "late" variant adds train 50210 with
//   s5  RBL->COS 10:30-12:00  5000 dt / 4000 dm
//   b3p RBL->COS [s5] board <= 09:30 deboard 13:00

#ifndef CHAINPLAN_TESTS_REVALIDATION_CATALOG_H_
#define CHAINPLAN_TESTS_REVALIDATION_CATALOG_H_

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chainplan/engine.h"
#include "chainplan/messages.h"
#include "corridor_fixture.h"

namespace chainplan::testing {

struct ExpectedChain {
  std::vector<std::string> blocks;
  RequestStatus status = RequestStatus::kAssigned;
};

struct RevalidationCase {
  std::string name;
  bool late_train = false;
  std::vector<RequestSpec> bookings;
  std::vector<Message> changes;
  std::map<std::string, ExpectedChain> expected;
  // Expected number of re-completion searches over all waves.
  int searches = -1;
};

inline Message CorridorInit(bool late_train) {
  Corridor f;
  if (late_train) {
    f.state.UpsertTrain("50210",
                        std::vector<SegmentSpec>{
                            {"s5", "50210", "RBL", "COS", Hm(10, 30), Hm(12, 0), {5000, 4000}}});
    f.state.UpsertBlock(CorridorBlock("b3p", {"s5"}, "RBL", "COS", Hm(9, 30), Hm(13, 0)));
  }
  return Message{ExportState(f.state)};
}

inline SegmentSpec CorridorSegmentWith(const std::string& id, CapacityVector cap) {
  const Corridor f;
  const Segment& s = f.state.segment(f.state.SegmentIndexOf(id));
  return {id,        s.train, f.state.station(s.from).id, f.state.station(s.to).id, s.departure,
          s.arrival, cap};
}

inline RequestSpec CorridorRequest(const std::string& id, std::int64_t weight,
                                   const std::string& destination = "COS") {
  RequestSpec r = CorridorR1(id);
  r.demand = {weight, 100};
  r.destination = destination;
  return r;
}

inline std::vector<RevalidationCase> RevalidationCatalog() {
  std::vector<RevalidationCase> cases;
  const RequestSpec r1 = CorridorR1();
  {
    RevalidationCase c{"s3-reduced-no-alternative", false, {r1}, {}, {}, 1};
    c.changes.push_back(Message{CorridorSegmentWith("s3", {500, 4000})});
    c.expected["r1"] = {{"b1"}, RequestStatus::kPartial};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"s3-reduced-later-train", true, {r1}, {}, {}, 1};
    c.changes.push_back(Message{CorridorSegmentWith("s3", {500, 4000})});
    c.expected["r1"] = {{"b1", "b3p"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"b3-deleted-later-train", true, {r1}, {}, {}, 1};
    BlockUpdate del;
    del.block.id = "b3";
    del.deleted = true;
    c.changes.push_back(Message{del});
    c.expected["r1"] = {{"b1", "b3p"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"b3-deleted-no-alternative", false, {r1}, {}, {}, 1};
    BlockUpdate del;
    del.block.id = "b3";
    del.deleted = true;
    c.changes.push_back(Message{del});
    c.expected["r1"] = {{"b1"}, RequestStatus::kPartial};
    cases.push_back(c);
  }
  {
    // The first block fails: the chain empties and a fresh assignment finds
    // nothing within the reduced planned capacity.
    RevalidationCase c{"s1-reduced-empties-chain", false, {r1}, {}, {}, 0};
    c.changes.push_back(Message{CorridorSegmentWith("s1", {500, 3000})});
    c.expected["r1"] = {{}, RequestStatus::kUnassigned};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"s4-reduced-untouched", false, {r1}, {}, {}, 0};
    c.changes.push_back(Message{CorridorSegmentWith("s4", {100, 100})});
    c.expected["r1"] = {{"b1", "b3"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"s3-capacity-raised", false, {r1}, {}, {}, 0};
    c.changes.push_back(Message{CorridorSegmentWith("s3", {9000, 9000})});
    c.expected["r1"] = {{"b1", "b3"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    // ra (promise 12:30) is revalidated before rb (promise 13:30) and gives
    // way; rb then fits.
    RevalidationCase c{"earliest-promise-first",
                       false,
                       {CorridorRequest("ra", 2000), CorridorRequest("rb", 2000, "LT")},
                       {},
                       {},
                       1};
    c.changes.push_back(Message{CorridorSegmentWith("s3", {3000, 4000})});
    c.expected["ra"] = {{"b1"}, RequestStatus::kPartial};
    c.expected["rb"] = {{"b1", "b4"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"earliest-promise-first-later-train",
                       true,
                       {CorridorRequest("ra", 2000), CorridorRequest("rb", 2000, "LT")},
                       {},
                       {},
                       1};
    c.changes.push_back(Message{CorridorSegmentWith("s3", {3000, 4000})});
    c.expected["ra"] = {{"b1", "b3p"}, RequestStatus::kAssigned};
    c.expected["rb"] = {{"b1", "b4"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"restriction-on-b3", true, {}, {}, {}, 1};
    RequestSpec r = r1;
    r.attributes["customer"] = "acme";
    c.bookings = {r};
    c.changes.push_back(Message{RestrictionUpdate{
        "b3", {{RestrictionAttribute::kCustomer, RestrictionMode::kForbid, {"acme"}}}}});
    c.expected["r1"] = {{"b1", "b3p"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"transfer-forbidden", false, {r1}, {}, {}, 1};
    c.changes.push_back(Message{ConnectionSpec{"b1", "b3", ConnectionKind::kForbidden}});
    c.expected["r1"] = {{"b1"}, RequestStatus::kPartial};
    cases.push_back(c);
  }
  {
    RevalidationCase c{"deadline-shortened", true, {r1}, {}, {}, 1};
    RequestSpec shorter = r1;
    shorter.delivery_latest = Hm(12, 0);
    c.changes.push_back(Message{UpdateRequest{shorter, true}});
    c.expected["r1"] = {{"b1"}, RequestStatus::kPartial};
    cases.push_back(c);
  }
  {
    // A later wave completes a partial chain once capacity returns.
    RevalidationCase c{"partial-recompleted", false, {r1}, {}, {}, 2};
    c.changes.push_back(Message{CorridorSegmentWith("s3", {500, 4000})});
    c.changes.push_back(Message{CorridorSegmentWith("s3", {5000, 4000})});
    c.expected["r1"] = {{"b1", "b3"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  {
    // Deferred changes wait for the trigger; the last capacity wins.
    RevalidationCase c{"deferred-batch", false, {r1}, {}, {}, 0};
    Message down{CorridorSegmentWith("s3", {500, 4000}), true};
    Message up{CorridorSegmentWith("s3", {5000, 4000}), true};
    c.changes = {down, up, Message{TriggerCompute{}}};
    c.expected["r1"] = {{"b1", "b3"}, RequestStatus::kAssigned};
    cases.push_back(c);
  }
  return cases;
}

// Runs a case through a fresh engine; returns mismatch descriptions.
inline std::vector<std::string> RunRevalidationCase(const RevalidationCase& c) {
  std::vector<std::string> problems;
  Engine engine;
  engine.Process(CorridorInit(c.late_train));
  for (const RequestSpec& r : c.bookings) {
    const MessageEffects fx = engine.Process(Message{BookRequest{r, true}});
    if (!fx.booking || fx.booking->outcome != OutcomeKind::kRouted) {
      problems.push_back("booking " + r.id + " not routed");
    }
  }
  const std::int64_t searches_before = engine.stats().revalidation_searches;
  for (const Message& m : c.changes) engine.Process(m);
  const NetworkState& s = engine.state();
  for (const auto& [id, want] : c.expected) {
    const Request& req = s.request(s.RequestIndexOf(id));
    std::vector<std::string> got;
    for (BlockIndex b : req.chain.blocks) got.push_back(s.block(b).id);
    if (got != want.blocks || req.status != want.status) {
      std::ostringstream os;
      os << id << ": got [";
      for (const auto& b : got) os << b << " ";
      os << "] " << RequestStatusName(req.status) << ", want [";
      for (const auto& b : want.blocks) os << b << " ";
      os << "] " << RequestStatusName(want.status);
      problems.push_back(os.str());
    }
  }
  const std::int64_t searches = engine.stats().revalidation_searches - searches_before;
  if (c.searches >= 0 && searches != c.searches) {
    problems.push_back("re-completion searches " + std::to_string(searches) + ", want " +
                       std::to_string(c.searches));
  }
  if (!s.LedgerConsistent()) problems.push_back("ledger inconsistent");
  return problems;
}

}  // namespace chainplan::testing

#endif  // CHAINPLAN_TESTS_REVALIDATION_CATALOG_H_
