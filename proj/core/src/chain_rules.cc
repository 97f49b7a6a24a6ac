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

#include "chainplan/chain_rules.h"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

namespace chainplan {

namespace {

void CheckBlock(const NetworkState& state, BlockIndex b) {
  if (b < 0 || static_cast<std::size_t>(b) >= state.num_blocks()) {
    throw LookupError("unknown block index " + std::to_string(b));
  }
}

bool StaysInGroup(const NetworkState& state, BlockIndex b) {
  return state.OriginGroup(b) == state.DestinationGroup(b);
}

}  // namespace

std::string_view CapacityModeName(CapacityMode mode) {
  switch (mode) {
    case CapacityMode::kIgnore:
      return "ignore";
    case CapacityMode::kIsolated:
      return "isolated";
    case CapacityMode::kRespect:
      return "respect";
  }
  return "unknown";
}

bool Chainable(const NetworkState& state, BlockIndex from, BlockIndex to) {
  CheckBlock(state, from);
  CheckBlock(state, to);
  if (state.DestinationGroup(from) != state.OriginGroup(to)) return false;
  const auto kind = state.FindConnection(from, to);
  if (kind == ConnectionKind::kForbidden) return false;
  for (BlockIndex x : state.ExclusiveTargets(from)) {
    if (x != to) return false;
  }
  if (kind == ConnectionKind::kExtra) return true;
  return state.block(from).deboarding_ready <= state.block(to).boarding_cutoff;
}

bool IsLoopFree(const NetworkState& state, std::span<const BlockIndex> blocks) {
  if (blocks.empty()) return true;
  std::vector<GroupIndex> visited{state.OriginGroup(blocks.front())};
  std::vector<BlockIndex> seen;
  for (BlockIndex b : blocks) {
    if (std::find(seen.begin(), seen.end(), b) != seen.end()) return false;
    seen.push_back(b);
    if (StaysInGroup(state, b)) continue;
    const GroupIndex g = state.DestinationGroup(b);
    if (std::find(visited.begin(), visited.end(), g) != visited.end()) {
      return false;
    }
    visited.push_back(g);
  }
  return true;
}

std::optional<std::string> AttributeValue(const Request& request,
                                          RestrictionAttribute attribute,
                                          const NetworkState& state) {
  switch (attribute) {
    case RestrictionAttribute::kOrigin:
      return state.station(request.origin).id;
    case RestrictionAttribute::kDestination:
      return state.station(request.destination).id;
    default:
      break;
  }
  const std::string key(AttributeName(attribute));
  if (auto it = request.attributes.find(key); it != request.attributes.end()) {
    return it->second;
  }
  if (attribute == RestrictionAttribute::kProductType && !request.product.empty()) {
    return request.product;
  }
  return std::nullopt;
}

bool RequestPasses(const Restriction& restriction, const Request& request,
                   const NetworkState& state) {
  const auto value = AttributeValue(request, restriction.attribute, state);
  if (!value) return false;
  const bool member = restriction.values.contains(*value);
  return restriction.mode == RestrictionMode::kAllow ? member : !member;
}

bool BlockAdmits(const NetworkState& state, BlockIndex b, const Request& request) {
  for (const Restriction& r : state.block(b).restrictions) {
    if (!RequestPasses(r, request, state)) return false;
  }
  return true;
}

bool ValidationResult::Has(ViolationKind kind, int position) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) {
    return v.kind == kind && v.position == position;
  });
}

bool ValidationResult::Has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.kind == kind; });
}

std::string_view ViolationName(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kTimeWindow:
      return "time-window";
    case ViolationKind::kRestriction:
      return "restriction";
    case ViolationKind::kCapacity:
      return "capacity";
    case ViolationKind::kNotChainable:
      return "not-chainable";
    case ViolationKind::kGeographicLoop:
      return "geographic-loop";
    case ViolationKind::kOriginMismatch:
      return "origin-mismatch";
    case ViolationKind::kDestinationMismatch:
      return "destination-mismatch";
    case ViolationKind::kDegenerate:
      return "degenerate";
    case ViolationKind::kUnavailableBlock:
      return "unavailable-block";
    case ViolationKind::kEmptyChain:
      return "empty-chain";
  }
  return "unknown";
}

// ---- CapacityView ----

CapacityView::CapacityView(const NetworkState& state, CapacityMode mode,
                           std::span<const RequestIndex> excluded)
    : state_(state), mode_(mode) {
  for (RequestIndex r : excluded) {
    const Request& req = state.request(r);
    if (!req.HoldsCapacity()) continue;
    for (BlockIndex b : req.chain.blocks) {
      excluded_block_[b] += req.demand;
      for (SegmentIndex s : state.block(b).segments) {
        excluded_segment_[s] += req.demand;
      }
    }
  }
}

CapacityVector CapacityView::Load(BlockIndex b) const {
  CapacityVector load = state_.BlockLoad(b);
  if (auto it = excluded_block_.find(b); it != excluded_block_.end()) {
    load -= it->second;
  }
  return load;
}

const CapacityView::SegmentInfo& CapacityView::Info(SegmentIndex s) const {
  if (auto it = cache_.find(s); it != cache_.end()) return it->second;
  SegmentInfo info;
  CapacityVector used = state_.SegmentUsage(s);
  if (auto it = excluded_segment_.find(s); it != excluded_segment_.end()) {
    used -= it->second;
  }
  for (BlockIndex b : state_.SegmentBlocks(s)) {
    const Block& blk = state_.block(b);
    used += blk.manual_utilization;
    used += blk.reservation;
    info.occupied += CapacityVector::Max(blk.reservation, Load(b));
  }
  info.adjusted = CapacityVector::Max(state_.segment(s).capacity, used);
  return cache_.emplace(s, info).first->second;
}

CapacityVector CapacityView::Adjusted(SegmentIndex s) const { return Info(s).adjusted; }

CapacityVector CapacityView::Occupied(SegmentIndex s) const { return Info(s).occupied; }

bool CapacityView::SegmentFits(
    SegmentIndex s,
    std::span<const std::pair<BlockIndex, CapacityVector>> deltas) const {
  if (mode_ == CapacityMode::kIgnore) return true;
  if (mode_ == CapacityMode::kIsolated) {
    CapacityVector total;
    for (const auto& [b, d] : deltas) total += d;
    return total.FitsIn(state_.segment(s).capacity);
  }
  const SegmentInfo& info = Info(s);
  CapacityVector occupied = info.occupied;
  for (const auto& [b, d] : deltas) {
    const Block& blk = state_.block(b);
    const CapacityVector load = Load(b);
    occupied -= CapacityVector::Max(blk.reservation, load);
    occupied += CapacityVector::Max(blk.reservation, load + d);
  }
  return occupied.FitsIn(info.adjusted);
}

bool CapacityView::Admits(BlockIndex b, const CapacityVector& demand) const {
  if (mode_ == CapacityMode::kIgnore) return true;
  const std::pair<BlockIndex, CapacityVector> delta{b, demand};
  for (SegmentIndex s : state_.block(b).segments) {
    if (!SegmentFits(s, std::span(&delta, 1))) return false;
  }
  return true;
}

std::vector<int> CapacityView::OverloadedPositions(
    std::span<const BlockIndex> blocks, const CapacityVector& demand) const {
  std::vector<int> positions;
  if (mode_ == CapacityMode::kIgnore) return positions;
  std::map<BlockIndex, CapacityVector> per_block;
  for (BlockIndex b : blocks) per_block[b] += demand;
  std::map<SegmentIndex, std::vector<std::pair<BlockIndex, CapacityVector>>> per_segment;
  for (const auto& [b, d] : per_block) {
    for (SegmentIndex s : state_.block(b).segments) per_segment[s].emplace_back(b, d);
  }
  std::vector<SegmentIndex> overloaded;
  for (const auto& [s, deltas] : per_segment) {
    if (!SegmentFits(s, deltas)) overloaded.push_back(s);
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& segs = state_.block(blocks[i]).segments;
    const bool hit = std::any_of(segs.begin(), segs.end(), [&](SegmentIndex s) {
      return std::binary_search(overloaded.begin(), overloaded.end(), s);
    });
    if (hit) positions.push_back(static_cast<int>(i));
  }
  return positions;
}

CapacityVector AdjustedSegmentCapacity(const NetworkState& state, SegmentIndex s) {
  return CapacityView(state, CapacityMode::kRespect).Adjusted(s);
}

// ---- validate_chain ----

ValidationResult ValidateChain(const NetworkState& state, const Request& request,
                               const TransportChain& chain,
                               const ValidationOptions& options) {
  ValidationResult result;
  auto add = [&](ViolationKind kind, int pos, std::string detail) {
    result.violations.push_back({kind, pos, std::move(detail)});
  };
  for (BlockIndex b : chain.blocks) CheckBlock(state, b);

  const GroupIndex origin = state.GroupOf(request.origin);
  const GroupIndex destination = state.GroupOf(request.destination);
  if (origin == destination) {
    add(ViolationKind::kDegenerate, -1, "origin and destination share a group");
  }
  if (chain.empty()) {
    add(ViolationKind::kEmptyChain, -1, "chain has no blocks");
    return result;
  }
  const int n = static_cast<int>(chain.size());
  const int split = static_cast<int>(std::min(chain.split, chain.blocks.size()));
  auto flexible = [&](int pos) { return pos >= split; };

  for (int i = 0; i < n; ++i) {
    const BlockIndex b = chain.blocks[i];
    const Block& blk = state.block(b);
    if (!blk.alive) {
      add(ViolationKind::kUnavailableBlock, i, "block '" + blk.id + "' was deleted");
    } else if (flexible(i) && !state.Searchable(b)) {
      add(ViolationKind::kUnavailableBlock, i,
          "block '" + blk.id + "' is not open for automatic booking");
    }
    if (!BlockAdmits(state, b, request)) {
      add(ViolationKind::kRestriction, i, "request fails restrictions of '" + blk.id + "'");
    }
  }

  if (flexible(0) && state.OriginGroup(chain.blocks.front()) != origin) {
    add(ViolationKind::kOriginMismatch, 0, "first block does not leave the origin");
  }
  if (flexible(n - 1) && state.DestinationGroup(chain.blocks.back()) != destination) {
    add(ViolationKind::kDestinationMismatch, n - 1,
        "last block does not reach the destination");
  }
  if (flexible(0) &&
      state.block(chain.blocks.front()).boarding_cutoff < request.pickup_earliest) {
    add(ViolationKind::kTimeWindow, 0, "boarding cutoff before pickup");
  }
  if (flexible(n - 1) &&
      state.block(chain.blocks.back()).deboarding_ready > request.delivery_latest) {
    add(ViolationKind::kTimeWindow, n - 1, "deboarding after delivery deadline");
  }

  for (int i = std::max(split, 1); i < n; ++i) {
    if (!Chainable(state, chain.blocks[i - 1], chain.blocks[i])) {
      add(ViolationKind::kNotChainable, i,
          "cannot transfer from '" + state.block(chain.blocks[i - 1]).id + "'");
    }
  }
  if (split < n) {
    const BlockIndex first = chain.blocks[split];
    std::vector<GroupIndex> visited{state.OriginGroup(first)};
    std::vector<BlockIndex> seen;
    for (int i = split; i < n; ++i) {
      const BlockIndex b = chain.blocks[i];
      if (std::find(seen.begin(), seen.end(), b) != seen.end()) {
        add(ViolationKind::kGeographicLoop, i, "block visited twice");
        continue;
      }
      seen.push_back(b);
      if (StaysInGroup(state, b)) continue;
      const GroupIndex g = state.DestinationGroup(b);
      if (std::find(visited.begin(), visited.end(), g) != visited.end()) {
        add(ViolationKind::kGeographicLoop, i,
            "station group '" + state.group_name(g) + "' visited twice");
      }
      visited.push_back(g);
    }
  }

  if (options.capacity != CapacityMode::kIgnore) {
    CapacityView view(state, options.capacity, options.excluded);
    for (int pos : view.OverloadedPositions(chain.blocks, request.demand)) {
      add(ViolationKind::kCapacity, pos,
          "segment capacity exceeded on '" + state.block(chain.blocks[pos]).id + "'");
    }
  }

  std::stable_sort(result.violations.begin(), result.violations.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.position < b.position;
                   });
  return result;
}

}  // namespace chainplan
