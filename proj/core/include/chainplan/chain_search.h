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

// Best-chain search and chain enumeration for a single request.
//
// FindBestChain runs a label-setting search on blocks that keeps one label
// per block. The surviving label may revisit a station group, in which case
// the search falls back to EnumerateChains stopped at the first chain.
// EnumerateChains is a best-first search over loop-free partial chains; the
// priority of a partial chain is a lower bound on the key of every completion,
// so complete chains leave the queue in key order.

#ifndef CHAINPLAN_CHAIN_SEARCH_H_
#define CHAINPLAN_CHAIN_SEARCH_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chainplan/chain_rules.h"
#include "chainplan/network_state.h"

namespace chainplan {

struct SearchLimits {
  double time_budget_seconds = 5.0;
  // Counts flexible blocks only.
  int max_blocks = 7;
  std::int64_t max_frontier = 10'000'000;
  int max_chains = 100;

  void Validate() const;
};

enum class KeyOrder { kArrivalFirst, kDepartureFirst };

struct TieBreakKey {
  Minutes arrival = 0;
  Minutes departure = 0;
  int block_count = 0;
  std::vector<Minutes> intermediate_departures;
  std::vector<std::string> block_ids;

  friend bool operator==(const TieBreakKey&, const TieBreakKey&) = default;
};

TieBreakKey MakeTieBreakKey(const NetworkState& state, const TransportChain& chain);
bool KeyLess(const TieBreakKey& a, const TieBreakKey& b, KeyOrder order);
// Strict weak order on chains of one request.
bool ChainLess(const NetworkState& state, const TransportChain& a,
               const TransportChain& b, KeyOrder order);

enum class BlockingReason {
  kRestriction,
  kTime,
  kCapacity,
  kTransfer,
  kLoop,
  kDepth,
  kUnavailable,
};
inline constexpr int kNumBlockingReasons = 7;
std::string_view BlockingReasonName(BlockingReason reason);

struct SearchDiagnostics {
  bool degenerate = false;
  bool no_departure = false;
  // Rejected candidate blocks per reason, one row per chain depth.
  std::vector<std::array<std::int64_t, kNumBlockingReasons>> per_layer;

  void Count(int layer, BlockingReason reason);
  std::int64_t Total(BlockingReason reason) const;
  std::optional<BlockingReason> Dominant() const;
};

struct TruncationFlags {
  bool time_limit = false;
  bool depth_limit = false;
  bool frontier_limit = false;
  bool count_limit = false;

  bool any() const { return time_limit || depth_limit || frontier_limit || count_limit; }
};

struct SearchStats {
  std::int64_t expansions = 0;
  std::int64_t labels = 0;
  bool used_fallback = false;
  double seconds = 0;
};

struct SearchOutcome {
  std::vector<TransportChain> chains;
  TruncationFlags truncated;
  CapacityMode capacity_mode = CapacityMode::kIgnore;
  SearchDiagnostics diagnostics;
  SearchStats stats;
};

struct SearchOptions {
  CapacityMode capacity = CapacityMode::kRespect;
  SearchLimits limits;
  KeyOrder key_order = KeyOrder::kArrivalFirst;
  // Requests whose usage is ignored by the capacity check.
  std::vector<RequestIndex> excluded;
  // Overrides the request's pickup time when set.
  std::optional<Minutes> pickup_override;
  // Overrides the request's required prefix when set. Positions from
  // `prefix_split` on are flexible blocks already kept: they count against
  // the depth limit and their groups against loops, and the returned chains
  // are split there.
  std::optional<std::vector<BlockIndex>> prefix_override;
  std::optional<std::size_t> prefix_split;
};

SearchOutcome FindBestChain(const NetworkState& state, const Request& request,
                            const SearchOptions& options);
SearchOutcome EnumerateChains(const NetworkState& state, const Request& request,
                              const SearchOptions& options);

}  // namespace chainplan

#endif  // CHAINPLAN_CHAIN_SEARCH_H_
