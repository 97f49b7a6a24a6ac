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

// Two-train fixture: train 50476 FBG-LQ-RBL and train 50208 RBL-COS-LT.
//
//   s1 FBG->LQ 04:00-04:30   s2 LQ->RBL 04:45-07:00    4000 dt / 3000 dm
//   s3 RBL->COS 10:00-11:30  s4 COS->LT 11:45-12:45    5000 dt / 4000 dm
//   b1 FBG->RBL [s1 s2] board <= 03:30 deboard 08:00
//   b2 LQ->RBL  [s2]    board <= 04:15 deboard 08:00
//   b3 RBL->COS [s3]    board <= 09:00 deboard 12:30
//   b4 RBL->LT  [s3 s4] board <= 09:00 deboard 13:30
//   r1 FBG->COS 800 dt / 600 dm, pickup >= 03:00, delivery <= 14:00

#ifndef CHAINPLAN_TESTS_CORRIDOR_FIXTURE_H_
#define CHAINPLAN_TESTS_CORRIDOR_FIXTURE_H_

#include <string>
#include <vector>

#include "chainplan/network_state.h"

namespace chainplan::testing {

constexpr Minutes Hm(int h, int m) { return h * 60 + m; }

inline SegmentSpec CorridorSegment(const std::string& id, const std::string& train,
                                   const std::string& from, const std::string& to, Minutes dep,
                                   Minutes arr, CapacityVector cap) {
  return SegmentSpec{id, train, from, to, dep, arr, cap};
}

inline BlockSpec CorridorBlock(const std::string& id, std::vector<std::string> segments,
                               const std::string& from, const std::string& to, Minutes board,
                               Minutes deboard) {
  BlockSpec b;
  b.id = id;
  b.segments = std::move(segments);
  b.origin = from;
  b.destination = to;
  b.boarding_cutoff = board;
  b.deboarding_ready = deboard;
  return b;
}

inline void BuildCorridor(NetworkState& state) {
  for (const char* id : {"FBG", "LQ", "RBL", "COS", "LT"}) {
    state.UpsertStation(Station{id, StationKind::kOperational, "", ""});
  }
  const CapacityVector small{4000, 3000};
  const CapacityVector large{5000, 4000};
  const std::vector<SegmentSpec> t1 = {
      CorridorSegment("s1", "50476", "FBG", "LQ", Hm(4, 0), Hm(4, 30), small),
      CorridorSegment("s2", "50476", "LQ", "RBL", Hm(4, 45), Hm(7, 0), small)};
  const std::vector<SegmentSpec> t2 = {
      CorridorSegment("s3", "50208", "RBL", "COS", Hm(10, 0), Hm(11, 30), large),
      CorridorSegment("s4", "50208", "COS", "LT", Hm(11, 45), Hm(12, 45), large)};
  state.UpsertTrain("50476", t1);
  state.UpsertTrain("50208", t2);
  state.UpsertBlock(CorridorBlock("b1", {"s1", "s2"}, "FBG", "RBL", Hm(3, 30), Hm(8, 0)));
  state.UpsertBlock(CorridorBlock("b2", {"s2"}, "LQ", "RBL", Hm(4, 15), Hm(8, 0)));
  state.UpsertBlock(CorridorBlock("b3", {"s3"}, "RBL", "COS", Hm(9, 0), Hm(12, 30)));
  state.UpsertBlock(CorridorBlock("b4", {"s3", "s4"}, "RBL", "LT", Hm(9, 0), Hm(13, 30)));
}

inline RequestSpec CorridorR1(const std::string& id = "r1") {
  RequestSpec r;
  r.id = id;
  r.origin = "FBG";
  r.destination = "COS";
  r.pickup_earliest = Hm(3, 0);
  r.delivery_latest = Hm(14, 0);
  r.demand = CapacityVector{800, 600};
  return r;
}

struct Corridor {
  NetworkState state;
  BlockIndex b1, b2, b3, b4;
  SegmentIndex s1, s2, s3, s4;

  Corridor() {
    BuildCorridor(state);
    b1 = state.BlockIndexOf("b1");
    b2 = state.BlockIndexOf("b2");
    b3 = state.BlockIndexOf("b3");
    b4 = state.BlockIndexOf("b4");
    s1 = state.SegmentIndexOf("s1");
    s2 = state.SegmentIndexOf("s2");
    s3 = state.SegmentIndexOf("s3");
    s4 = state.SegmentIndexOf("s4");
  }

  TransportChain Chain(std::vector<BlockIndex> blocks, std::size_t split = 0) const {
    return TransportChain{std::move(blocks), split};
  }
};

}  // namespace chainplan::testing

#endif  // CHAINPLAN_TESTS_CORRIDOR_FIXTURE_H_
