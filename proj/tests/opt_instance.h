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

// Random small throughput instances and an exhaustive selection oracle that
// evaluates capacity directly on the network state.

#ifndef CHAINPLAN_TESTS_OPT_INSTANCE_H_
#define CHAINPLAN_TESTS_OPT_INSTANCE_H_

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chainplan/network_state.h"
#include "chainplan/throughput_model.h"

namespace chainplan::testing {

struct OptInstance {
  NetworkState state;
  std::vector<CandidateSet> candidates;
};

// Two or three trains with a handful of segments each, blocks over
// contiguous segment ranges, a few outside assignments, reservations and
// manual utilization. Candidate chains are arbitrary block lists; the model
// does not care about chain validity.
inline void BuildOptInstance(OptInstance& inst, std::mt19937_64& rng, int max_candidates) {
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  NetworkState& s = inst.state;
  const int trains = 2 + pick(2);
  std::vector<BlockIndex> blocks;
  for (int t = 0; t < trains; ++t) {
    const int nseg = 1 + pick(3);
    std::vector<SegmentSpec> segs;
    for (int k = 0; k <= nseg; ++k) {
      s.UpsertStation(
          {"T" + std::to_string(t) + "S" + std::to_string(k), StationKind::kOperational, "", ""});
    }
    for (int k = 0; k < nseg; ++k) {
      segs.push_back({"t" + std::to_string(t) + "s" + std::to_string(k),
                      "t" + std::to_string(t),
                      "T" + std::to_string(t) + "S" + std::to_string(k),
                      "T" + std::to_string(t) + "S" + std::to_string(k + 1),
                      100 * k + 10,
                      100 * k + 60,
                      {static_cast<std::int64_t>(400 + 100 * pick(8)),
                       static_cast<std::int64_t>(300 + 100 * pick(6))}});
    }
    s.UpsertTrain("t" + std::to_string(t), segs);
    const int nblocks = 1 + pick(3);
    for (int b = 0; b < nblocks; ++b) {
      const int from = pick(nseg);
      const int to = from + pick(nseg - from);
      BlockSpec spec;
      spec.id = "t" + std::to_string(t) + "b" + std::to_string(b);
      for (int k = from; k <= to; ++k) spec.segments.push_back(segs[k].id);
      spec.origin = segs[from].from;
      spec.destination = segs[to].to;
      spec.boarding_cutoff = segs[from].departure - 5;
      spec.deboarding_ready = segs[to].arrival + 5;
      if (pick(4) == 0) {
        spec.reservation = {static_cast<std::int64_t>(100 * pick(5)),
                            static_cast<std::int64_t>(100 * pick(4))};
      }
      if (pick(6) == 0) spec.manual_utilization = {static_cast<std::int64_t>(50 * pick(4)), 0};
      blocks.push_back(s.UpsertBlock(spec));
    }
  }
  auto random_chain = [&]() {
    TransportChain c;
    const int len = 1 + pick(2);
    for (int k = 0; k < len; ++k) {
      const BlockIndex b = blocks[pick(static_cast<int>(blocks.size()))];
      if (std::find(c.blocks.begin(), c.blocks.end(), b) == c.blocks.end()) c.blocks.push_back(b);
    }
    return c;
  };
  auto add_request = [&](const std::string& id) {
    RequestSpec spec;
    spec.id = id;
    spec.origin = s.station(0).id;
    spec.destination = s.station(1).id;
    spec.pickup_earliest = 0;
    spec.delivery_latest = 1000;
    spec.demand = {static_cast<std::int64_t>(50 + 50 * pick(6)),
                   static_cast<std::int64_t>(50 + 50 * pick(4))};
    spec.priority = pick(4) == 0 ? 2 : 1;
    return s.AddRequest(spec);
  };
  // Untouchable assignments.
  const int outside = pick(3);
  for (int k = 0; k < outside; ++k) {
    const RequestIndex r = add_request("o" + std::to_string(k));
    s.SetChain(r, random_chain(), RequestStatus::kAssigned);
  }
  int budget = max_candidates;
  int k = 0;
  while (budget > 0) {
    const RequestIndex r = add_request("r" + std::to_string(k++));
    CandidateSet set;
    set.request = r;
    if (pick(4) == 0) {
      const TransportChain current = random_chain();
      s.SetChain(r, current, RequestStatus::kAssigned);
      set.fixed = true;
      set.chains.push_back(current);
    }
    const int n = std::min(budget - static_cast<int>(set.chains.size()), pick(4));
    for (int c = 0; c < n; ++c) {
      TransportChain chain = random_chain();
      if (std::find(set.chains.begin(), set.chains.end(), chain) == set.chains.end()) {
        set.chains.push_back(chain);
      }
    }
    std::shuffle(set.chains.begin(), set.chains.end(), rng);
    budget -= std::max<int>(1, static_cast<int>(set.chains.size()));
    inst.candidates.push_back(std::move(set));
  }
}

// Best weighted selection, scored with W * D - rank, where capacity is read
// straight off the network state.
struct SelectionOracle {
  const NetworkState& state;
  const std::vector<CandidateSet>& sets;

  std::int64_t Denominator() const {
    std::size_t most = 0;
    for (const auto& set : sets) most = std::max(most, set.chains.size());
    return static_cast<std::int64_t>(sets.size() * most) + 1;
  }

  bool Fits(const std::vector<int>& choice) const {
    std::set<RequestIndex> moving;
    for (const auto& set : sets) moving.insert(set.request);
    std::map<BlockIndex, CapacityVector> load;
    for (std::size_t b = 0; b < state.num_blocks(); ++b) {
      load[static_cast<BlockIndex>(b)] = state.block(static_cast<BlockIndex>(b)).manual_utilization;
    }
    for (std::size_t r = 0; r < state.num_requests(); ++r) {
      const Request& req = state.request(static_cast<RequestIndex>(r));
      if (moving.contains(static_cast<RequestIndex>(r)) || !req.HoldsCapacity()) continue;
      for (BlockIndex b : req.chain.blocks) load[b] += req.demand;
    }
    for (std::size_t k = 0; k < sets.size(); ++k) {
      if (choice[k] < 0) continue;
      const Request& req = state.request(sets[k].request);
      for (BlockIndex b : sets[k].chains[choice[k]].blocks) load[b] += req.demand;
    }
    for (std::size_t s = 0; s < state.num_segments(); ++s) {
      const auto si = static_cast<SegmentIndex>(s);
      CapacityVector occupied;
      CapacityVector plain;
      for (std::size_t b = 0; b < state.num_blocks(); ++b) {
        const Block& blk = state.block(static_cast<BlockIndex>(b));
        if (std::find(blk.segments.begin(), blk.segments.end(), si) == blk.segments.end()) {
          continue;
        }
        occupied += CapacityVector::Max(blk.reservation, load[static_cast<BlockIndex>(b)]);
        plain += blk.reservation + blk.manual_utilization;
      }
      // Current usage of every holder, model requests included.
      for (std::size_t r = 0; r < state.num_requests(); ++r) {
        const Request& req = state.request(static_cast<RequestIndex>(r));
        if (!req.HoldsCapacity()) continue;
        for (BlockIndex b : req.chain.blocks) {
          const auto& segs = state.block(b).segments;
          if (std::find(segs.begin(), segs.end(), si) != segs.end()) plain += req.demand;
        }
      }
      const CapacityVector bound = CapacityVector::Max(state.segment(si).capacity, plain);
      if (!occupied.FitsIn(bound)) return false;
    }
    return true;
  }

  // Returns the best score, or -1 when nothing is feasible.
  std::int64_t Best() const {
    const std::int64_t d = Denominator();
    std::vector<int> choice(sets.size(), -1);
    std::int64_t best = -1;
    auto rec = [&](auto&& self, std::size_t k, std::int64_t score) -> void {
      if (k == sets.size()) {
        if (score > best && Fits(choice)) best = score;
        return;
      }
      const int priority = state.request(sets[k].request).priority;
      for (int c = 0; c < static_cast<int>(sets[k].chains.size()); ++c) {
        choice[k] = c;
        self(self, k + 1, score + priority * d - c);
      }
      choice[k] = -1;
      if (!sets[k].fixed) self(self, k + 1, score);
    };
    rec(rec, 0, 0);
    return best;
  }
};

}  // namespace chainplan::testing

#endif  // CHAINPLAN_TESTS_OPT_INSTANCE_H_
