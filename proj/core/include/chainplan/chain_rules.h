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

// Validity predicates over blocks and chains, and the capacity view shared by
// search, revalidation and the throughput model.

#ifndef CHAINPLAN_CHAIN_RULES_H_
#define CHAINPLAN_CHAIN_RULES_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chainplan/network_state.h"
#include "chainplan/types.h"

namespace chainplan {

// kIgnore skips capacity entirely. kIsolated checks the request alone against
// planned segment capacities, as if no other request existed. kRespect checks
// against current usage, reservations and adjusted capacities.
enum class CapacityMode { kIgnore, kIsolated, kRespect };

std::string_view CapacityModeName(CapacityMode mode);

bool Chainable(const NetworkState& state, BlockIndex from, BlockIndex to);

// Visited groups are the first block's origin followed by each destination;
// blocks staying inside one group add nothing. A repeated block also counts
// as a loop.
bool IsLoopFree(const NetworkState& state, std::span<const BlockIndex> blocks);

bool RequestPasses(const Restriction& restriction, const Request& request,
                   const NetworkState& state);
bool BlockAdmits(const NetworkState& state, BlockIndex b, const Request& request);

// Value of a restriction attribute for a request; origin and destination
// resolve to station ids.
std::optional<std::string> AttributeValue(const Request& request,
                                          RestrictionAttribute attribute,
                                          const NetworkState& state);

enum class ViolationKind {
  kTimeWindow,
  kRestriction,
  kCapacity,
  kNotChainable,
  kGeographicLoop,
  kOriginMismatch,
  kDestinationMismatch,
  kDegenerate,
  kUnavailableBlock,
  kEmptyChain,
};

std::string_view ViolationName(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  // Chain position the violation is attached to, -1 for whole-chain reasons.
  int position = -1;
  std::string detail;

  friend bool operator==(const Violation& a, const Violation& b) {
    return a.kind == b.kind && a.position == b.position;
  }
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool Has(ViolationKind kind, int position) const;
  bool Has(ViolationKind kind) const;
};

// Per-segment capacity bookkeeping as seen by a request. Loads of excluded
// requests are removed from both the block loads and the adjusted capacity,
// which lets a request be checked against the state as if it were not
// assigned.
class CapacityView {
 public:
  CapacityView(const NetworkState& state, CapacityMode mode,
               std::span<const RequestIndex> excluded = {});

  CapacityMode mode() const { return mode_; }

  // Block usage plus manual utilization, minus excluded requests.
  CapacityVector Load(BlockIndex b) const;
  // max(planned, usage + manual + reservations) without excluded requests.
  CapacityVector Adjusted(SegmentIndex s) const;
  // Sum over alive blocks b of the segment of max(res_b, load_b).
  CapacityVector Occupied(SegmentIndex s) const;

  // Whether putting `demand` on block b alone keeps all its segments within
  // bounds.
  bool Admits(BlockIndex b, const CapacityVector& demand) const;
  // Exact check for a whole block sequence; returns the positions of blocks
  // having an overloaded segment.
  std::vector<int> OverloadedPositions(std::span<const BlockIndex> blocks,
                                       const CapacityVector& demand) const;

 private:
  struct SegmentInfo {
    CapacityVector adjusted;
    CapacityVector occupied;
  };
  const SegmentInfo& Info(SegmentIndex s) const;
  bool SegmentFits(SegmentIndex s,
                   std::span<const std::pair<BlockIndex, CapacityVector>> deltas) const;

  const NetworkState& state_;
  CapacityMode mode_;
  std::unordered_map<BlockIndex, CapacityVector> excluded_block_;
  std::unordered_map<SegmentIndex, CapacityVector> excluded_segment_;
  mutable std::unordered_map<SegmentIndex, SegmentInfo> cache_;
};

CapacityVector AdjustedSegmentCapacity(const NetworkState& state, SegmentIndex s);

struct ValidationOptions {
  CapacityMode capacity = CapacityMode::kRespect;
  // Requests whose current usage is ignored, usually the validated request
  // itself when it already holds the chain.
  std::vector<RequestIndex> excluded;
};

ValidationResult ValidateChain(const NetworkState& state, const Request& request,
                               const TransportChain& chain,
                               const ValidationOptions& options);

}  // namespace chainplan

#endif  // CHAINPLAN_CHAIN_RULES_H_
