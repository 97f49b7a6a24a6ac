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

// Staged online assignment of new requests.
//
//   1. best chain per request in isolation; requests without one are not
//      routable. Optimize.
//   2. best chain respecting capacity for each unrouted request. Optimize,
//      unless some request had none.
//   3. all chains respecting capacity for every request. Optimize, same
//      condition.
//   4. all chains for the requests whose current chain shares a segment with
//      a candidate; optimize once more with them pinned to stay routed.
//
// Every optimization that routes all requests ends the call. The state is
// only written once, with the last assignment found.

#ifndef CHAINPLAN_ONLINE_ASSIGNMENT_H_
#define CHAINPLAN_ONLINE_ASSIGNMENT_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "chainplan/chain_cache.h"
#include "chainplan/chain_search.h"
#include "chainplan/network_state.h"
#include "chainplan/throughput_model.h"

namespace chainplan {

enum class AssignmentStage { kIsolatedBfs, kCapacityBfs, kAllChains, kNeighborhood };
inline constexpr int kNumStages = 4;
std::string_view StageName(AssignmentStage stage);

enum class OutcomeKind { kRouted, kNotRoutable, kNoCapacity, kTimeoutPartial };
inline constexpr int kNumOutcomeKinds = 4;
std::string_view OutcomeName(OutcomeKind kind);

struct RequestOutcome {
  RequestIndex request = -1;
  OutcomeKind kind = OutcomeKind::kNotRoutable;
  TransportChain chain;
  // Stage of the optimization that produced the chain; set when routed.
  std::optional<AssignmentStage> stage;
};

struct StageCounters {
  double seconds = 0;
  std::int64_t searches = 0;
  std::int64_t optimizations = 0;
};

// Time spent per function, summed over the call.
struct FunctionTimes {
  double best_chain = 0;
  double enumerate = 0;
  double build_model = 0;
  double solve = 0;
};

struct AssignmentOutcome {
  // One entry per input request, in input order.
  std::vector<RequestOutcome> results;
  std::array<StageCounters, kNumStages> stages{};
  FunctionTimes times;
  // Requests pulled into the last optimization by step 4.
  std::vector<RequestIndex> neighborhood;
  // Requests outside the input whose chain changed.
  std::vector<std::pair<RequestIndex, TransportChain>> rerouted;
  // Last stage that ran.
  AssignmentStage last_stage = AssignmentStage::kIsolatedBfs;
  bool timed_out = false;
  std::int64_t cache_hits = 0;
  double seconds = 0;

  std::int64_t search_calls() const;
  const RequestOutcome* Find(RequestIndex r) const;
};

struct AssignConfig {
  double time_budget_seconds = 5.0;
  SearchLimits limits;
  KeyOrder key_order = KeyOrder::kArrivalFirst;
  int neighborhood_depth = 1;
  SolveOptions solve;
  // Optional; used for the enumeration stages.
  ChainCache* cache = nullptr;
};

// Requests holding a chain (manual ones excluded) whose chain shares a
// segment with one of `chains`, minus `exclude`.
std::vector<RequestIndex> Neighborhood(const NetworkState& state,
                                       std::span<const TransportChain> chains,
                                       std::span<const RequestIndex> exclude = {});

struct TryResult {
  std::vector<RequestIndex> routed;
  std::vector<RequestIndex> unrouted;
  // Chosen chain of every model request, fixed ones included.
  std::map<RequestIndex, TransportChain> assignment;
  bool success = false;
  bool proven_optimal = false;
  double build_seconds = 0;
  double solve_seconds = 0;
};

// Optimizes `requests` over their candidates. Requests listed in `fixed`
// must stay routed; they may carry candidates of their own or rely on their
// current chain. Solver failures yield every request unrouted.
TryResult TryOptimization(const NetworkState& state, std::span<const RequestIndex> requests,
                          const std::map<RequestIndex, std::vector<TransportChain>>& candidates,
                          std::span<const RequestIndex> fixed, const SolveOptions& options);

// Runs the staged assignment for `requests` and writes the result into the
// state. Manual requests are rejected with InvalidInput.
AssignmentOutcome Assign(NetworkState& state, std::span<const RequestIndex> requests,
                         const AssignConfig& config = {});

// Sequential baseline: each request takes its best chain respecting capacity,
// in input order, or stays unrouted.
AssignmentOutcome AssignGreedy(NetworkState& state, std::span<const RequestIndex> requests,
                               const AssignConfig& config = {});

}  // namespace chainplan

#endif  // CHAINPLAN_ONLINE_ASSIGNMENT_H_
