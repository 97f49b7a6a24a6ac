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

#include "chainplan/network_state.h"

#include <algorithm>
#include <array>
#include <string>
#include <utility>

namespace chainplan {

namespace {

constexpr std::array<std::pair<RestrictionAttribute, std::string_view>, 7>
    kAttributeNames = {{
        {RestrictionAttribute::kOrigin, "origin"},
        {RestrictionAttribute::kDestination, "destination"},
        {RestrictionAttribute::kCustomer, "customer"},
        {RestrictionAttribute::kNhmCode, "nhm-code"},
        {RestrictionAttribute::kProductType, "product-type"},
        {RestrictionAttribute::kMaxSpeed, "max-speed"},
        {RestrictionAttribute::kCoupling, "coupling"},
    }};

void CheckCapacity(const CapacityVector& c, const std::string& what) {
  for (int d = 0; d < kCapacityDimensions; ++d) {
    if (c[d] < 0 || c[d] > kMaxCapacityComponent) {
      throw InvalidInput(what + ": capacity component out of range");
    }
  }
}

void EraseValue(std::vector<RequestIndex>& v, RequestIndex r) {
  auto it = std::find(v.begin(), v.end(), r);
  if (it != v.end()) v.erase(it);
}

}  // namespace

std::string_view AttributeName(RestrictionAttribute attribute) {
  for (const auto& [a, name] : kAttributeNames) {
    if (a == attribute) return name;
  }
  return "unknown";
}

std::optional<RestrictionAttribute> ParseAttribute(std::string_view name) {
  for (const auto& [a, n] : kAttributeNames) {
    if (n == name) return a;
  }
  return std::nullopt;
}

std::string_view ConnectionKindName(ConnectionKind kind) {
  switch (kind) {
    case ConnectionKind::kForbidden:
      return "forbidden";
    case ConnectionKind::kExtra:
      return "extra";
    case ConnectionKind::kExclusive:
      return "exclusive";
  }
  return "unknown";
}

std::optional<ConnectionKind> ParseConnectionKind(std::string_view name) {
  if (name == "forbidden") return ConnectionKind::kForbidden;
  if (name == "extra") return ConnectionKind::kExtra;
  if (name == "exclusive") return ConnectionKind::kExclusive;
  return std::nullopt;
}

std::string_view RequestStatusName(RequestStatus status) {
  switch (status) {
    case RequestStatus::kUnassigned:
      return "unassigned";
    case RequestStatus::kAssigned:
      return "assigned";
    case RequestStatus::kPartial:
      return "partial";
    case RequestStatus::kRejected:
      return "rejected";
    case RequestStatus::kManual:
      return "manual";
  }
  return "unknown";
}

void NetworkState::Reset() {
  const std::uint64_t version = version_;
  const std::uint64_t network_version = network_version_;
  *this = NetworkState();
  version_ = version + 1;
  network_version_ = network_version + 1;
}

void NetworkState::TouchNetwork() {
  ++version_;
  ++network_version_;
}

// ---- Stations ----

GroupIndex NetworkState::InternGroup(const std::string& name) {
  auto [it, inserted] =
      group_ids_.try_emplace(name, static_cast<GroupIndex>(group_names_.size()));
  if (inserted) group_names_.push_back(name);
  return it->second;
}

StationIndex NetworkState::UpsertStation(const Station& station) {
  if (station.id.empty()) throw InvalidInput("station id must not be empty");
  auto [it, inserted] = station_ids_.try_emplace(
      station.id, static_cast<StationIndex>(stations_.size()));
  if (inserted) {
    stations_.push_back(station);
  } else {
    stations_[it->second] = station;
  }
  if (station.kind == StationKind::kOperational) {
    InternGroup(station.group.empty() ? "@" + station.id : station.group);
  }
  groups_dirty_ = true;
  TouchNetwork();
  return it->second;
}

std::optional<StationIndex> NetworkState::FindStation(std::string_view id) const {
  auto it = station_ids_.find(std::string(id));
  if (it == station_ids_.end()) return std::nullopt;
  return it->second;
}

StationIndex NetworkState::StationIndexOf(std::string_view id) const {
  auto found = FindStation(id);
  if (!found) throw LookupError("unknown station '" + std::string(id) + "'");
  return *found;
}

void NetworkState::RefreshGroups() const {
  station_groups_.assign(stations_.size(), -1);
  for (std::size_t i = 0; i < stations_.size(); ++i) {
    const Station& s = stations_[i];
    if (s.kind != StationKind::kOperational) continue;
    const std::string key = s.group.empty() ? "@" + s.id : s.group;
    station_groups_[i] = group_ids_.at(key);
  }
  for (std::size_t i = 0; i < stations_.size(); ++i) {
    const Station& s = stations_[i];
    if (s.kind != StationKind::kCommercial) continue;
    const std::string& target = s.operational.empty() ? s.id : s.operational;
    auto it = station_ids_.find(target);
    if (it != station_ids_.end() &&
        stations_[it->second].kind == StationKind::kOperational) {
      station_groups_[i] = station_groups_[it->second];
    }
  }
  groups_dirty_ = false;
}

GroupIndex NetworkState::GroupOf(StationIndex station) const {
  if (groups_dirty_) RefreshGroups();
  const GroupIndex g = station_groups_[station];
  if (g < 0) {
    throw LookupError("station '" + stations_[station].id +
                      "' has no operational mapping");
  }
  return g;
}

// ---- Segments ----

SegmentIndex NetworkState::UpsertSegment(const SegmentSpec& spec) {
  if (spec.id.empty()) throw InvalidInput("segment id must not be empty");
  if (spec.departure >= spec.arrival) {
    throw InvalidInput("segment '" + spec.id + "': departure must precede arrival");
  }
  CheckCapacity(spec.capacity, "segment '" + spec.id + "'");
  Segment seg;
  seg.id = spec.id;
  seg.train = spec.train;
  seg.from = StationIndexOf(spec.from);
  seg.to = StationIndexOf(spec.to);
  seg.departure = spec.departure;
  seg.arrival = spec.arrival;
  seg.capacity = spec.capacity;
  auto [it, inserted] = segment_ids_.try_emplace(
      spec.id, static_cast<SegmentIndex>(segments_.size()));
  if (inserted) {
    segments_.push_back(std::move(seg));
    segment_usage_.emplace_back();
  } else {
    Segment& old = segments_[it->second];
    if (old.train != seg.train) {
      auto tr = trains_.find(old.train);
      if (tr != trains_.end()) {
        std::erase(tr->second, it->second);
      }
    }
    old = std::move(seg);
  }
  auto& train_segments = trains_[spec.train];
  if (std::find(train_segments.begin(), train_segments.end(), it->second) ==
      train_segments.end()) {
    train_segments.push_back(it->second);
  }
  TouchNetwork();
  return it->second;
}

std::vector<SegmentIndex> NetworkState::UpsertTrain(
    std::string_view train, std::span<const SegmentSpec> segments) {
  for (std::size_t k = 0; k < segments.size(); ++k) {
    if (segments[k].train != train) {
      throw InvalidInput("segment '" + segments[k].id +
                         "' does not belong to train '" + std::string(train) + "'");
    }
    if (k > 0) {
      const SegmentSpec& a = segments[k - 1];
      const SegmentSpec& b = segments[k];
      if (a.to != b.from || a.arrival > b.departure) {
        throw InvalidInput("train '" + std::string(train) +
                           "': segments must form a time-ordered path");
      }
    }
    // Resolve stations before mutating anything.
    if (segments[k].id.empty()) throw InvalidInput("segment id must not be empty");
    CheckCapacity(segments[k].capacity, "segment '" + segments[k].id + "'");
    StationIndexOf(segments[k].from);
    StationIndexOf(segments[k].to);
    if (segments[k].departure >= segments[k].arrival) {
      throw InvalidInput("segment '" + segments[k].id +
                         "': departure must precede arrival");
    }
  }
  std::vector<SegmentIndex> result;
  std::vector<SegmentIndex> previous;
  if (auto it = trains_.find(train); it != trains_.end()) previous = it->second;
  for (const SegmentSpec& spec : segments) result.push_back(UpsertSegment(spec));
  for (SegmentIndex s : previous) {
    if (std::find(result.begin(), result.end(), s) == result.end()) {
      segments_[s].alive = false;
    }
  }
  for (SegmentIndex s : result) segments_[s].alive = true;
  trains_[std::string(train)] = result;
  for (Block& blk : blocks_) {
    if (!blk.alive) continue;
    for (SegmentIndex s : blk.segments) {
      if (!segments_[s].alive) {
        blk.alive = false;
        break;
      }
    }
  }
  TouchNetwork();
  return result;
}

std::vector<BlockIndex> NetworkState::DeleteTrain(std::string_view train) {
  auto it = trains_.find(train);
  if (it == trains_.end()) {
    throw LookupError("unknown train '" + std::string(train) + "'");
  }
  std::vector<BlockIndex> killed;
  for (SegmentIndex s : it->second) segments_[s].alive = false;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    Block& blk = blocks_[b];
    if (!blk.alive) continue;
    for (SegmentIndex s : blk.segments) {
      if (!segments_[s].alive) {
        blk.alive = false;
        killed.push_back(static_cast<BlockIndex>(b));
        break;
      }
    }
  }
  TouchNetwork();
  return killed;
}

std::vector<SegmentIndex> NetworkState::TrainSegments(std::string_view train) const {
  auto it = trains_.find(train);
  if (it == trains_.end()) return {};
  return it->second;
}

std::optional<SegmentIndex> NetworkState::FindSegment(std::string_view id) const {
  auto it = segment_ids_.find(std::string(id));
  if (it == segment_ids_.end()) return std::nullopt;
  return it->second;
}

SegmentIndex NetworkState::SegmentIndexOf(std::string_view id) const {
  auto found = FindSegment(id);
  if (!found) throw LookupError("unknown segment '" + std::string(id) + "'");
  return *found;
}

// ---- Blocks ----

void NetworkState::CheckBlockInvariants(const Block& block) const {
  if (block.deboarding_ready < block.boarding_cutoff) {
    throw InvalidInput("block '" + block.id +
                       "': deboarding must not precede boarding");
  }
  if (block.segments.empty()) {
    if (!block.phase_connector) {
      throw InvalidInput("block '" + block.id +
                         "': only phase connectors may carry zero segments");
    }
    if (GroupOf(block.origin) != GroupOf(block.destination)) {
      throw InvalidInput("block '" + block.id +
                         "': a phase connector stays within one yard");
    }
    return;
  }
  const Segment& first = segments_[block.segments.front()];
  const Segment& last = segments_[block.segments.back()];
  if (block.boarding_cutoff > first.departure) {
    throw InvalidInput("block '" + block.id +
                       "': boarding cutoff after first segment departure");
  }
  if (block.deboarding_ready < last.arrival) {
    throw InvalidInput("block '" + block.id +
                       "': deboarding before last segment arrival");
  }
  if (GroupOf(block.origin) != GroupOf(first.from)) {
    throw InvalidInput("block '" + block.id +
                       "': origin differs from first segment's station group");
  }
  if (GroupOf(block.destination) != GroupOf(last.to)) {
    throw InvalidInput("block '" + block.id +
                       "': destination differs from last segment's station group");
  }
  for (std::size_t k = 1; k < block.segments.size(); ++k) {
    const Segment& a = segments_[block.segments[k - 1]];
    const Segment& b = segments_[block.segments[k]];
    if (GroupOf(a.to) != GroupOf(b.from) || a.arrival > b.departure) {
      throw InvalidInput("block '" + block.id +
                         "': segments are not consecutive");
    }
  }
}

BlockIndex NetworkState::UpsertBlock(const BlockSpec& spec) {
  if (spec.id.empty()) throw InvalidInput("block id must not be empty");
  CheckCapacity(spec.reservation, "block '" + spec.id + "' reservation");
  CheckCapacity(spec.manual_utilization, "block '" + spec.id + "' utilization");
  Block block;
  block.id = spec.id;
  for (const std::string& s : spec.segments) {
    const SegmentIndex idx = SegmentIndexOf(s);
    if (!segments_[idx].alive) {
      throw LookupError("segment '" + s + "' was deleted");
    }
    block.segments.push_back(idx);
  }
  block.origin = StationIndexOf(spec.origin);
  block.destination = StationIndexOf(spec.destination);
  block.boarding_cutoff = spec.boarding_cutoff;
  block.deboarding_ready = spec.deboarding_ready;
  block.restrictions = spec.restrictions;
  block.reservation = spec.reservation;
  block.manual_utilization = spec.manual_utilization;
  block.bookable = spec.bookable;
  block.manual = spec.manual;
  block.phase_connector = spec.phase_connector;
  CheckBlockInvariants(block);

  auto [it, inserted] =
      block_ids_.try_emplace(spec.id, static_cast<BlockIndex>(blocks_.size()));
  if (inserted) {
    blocks_.push_back(std::move(block));
    block_usage_.emplace_back();
    block_requests_.emplace_back();
    exclusive_out_.emplace_back();
    extra_out_.emplace_back();
  } else {
    // Holders keep their chains; move their usage to the new segments.
    const CapacityVector held = block_usage_[it->second];
    for (SegmentIndex s : blocks_[it->second].segments) segment_usage_[s] -= held;
    for (SegmentIndex s : block.segments) segment_usage_[s] += held;
    blocks_[it->second] = std::move(block);
  }
  TouchNetwork();
  return it->second;
}

void NetworkState::DeleteBlock(BlockIndex b) {
  blocks_.at(b).alive = false;
  TouchNetwork();
}

void NetworkState::SetRestrictions(BlockIndex b,
                                   std::vector<Restriction> restrictions) {
  blocks_.at(b).restrictions = std::move(restrictions);
  TouchNetwork();
}

void NetworkState::SetReservation(BlockIndex b, const CapacityVector& reservation) {
  CheckCapacity(reservation, "reservation on '" + blocks_.at(b).id + "'");
  blocks_[b].reservation = reservation;
  TouchNetwork();
}

std::optional<BlockIndex> NetworkState::FindBlock(std::string_view id) const {
  auto it = block_ids_.find(std::string(id));
  if (it == block_ids_.end()) return std::nullopt;
  return it->second;
}

BlockIndex NetworkState::BlockIndexOf(std::string_view id) const {
  auto found = FindBlock(id);
  if (!found) throw LookupError("unknown block '" + std::string(id) + "'");
  return *found;
}

Minutes NetworkState::BlockDeparture(BlockIndex b) const {
  const Block& blk = blocks_[b];
  if (blk.segments.empty()) return blk.boarding_cutoff;
  return segments_[blk.segments.front()].departure;
}

// ---- Connections ----

void NetworkState::SetConnection(BlockIndex from, BlockIndex to,
                                 ConnectionKind kind) {
  if (from < 0 || static_cast<std::size_t>(from) >= blocks_.size() || to < 0 ||
      static_cast<std::size_t>(to) >= blocks_.size()) {
    throw LookupError("connection references an unknown block");
  }
  RemoveConnection(from, to);
  connections_[PairKey(from, to)] = kind;
  if (kind == ConnectionKind::kExclusive) exclusive_out_[from].push_back(to);
  if (kind == ConnectionKind::kExtra) extra_out_[from].push_back(to);
  TouchNetwork();
}

void NetworkState::RemoveConnection(BlockIndex from, BlockIndex to) {
  auto it = connections_.find(PairKey(from, to));
  if (it == connections_.end()) return;
  std::erase(exclusive_out_[from], to);
  std::erase(extra_out_[from], to);
  connections_.erase(it);
  TouchNetwork();
}

std::optional<ConnectionKind> NetworkState::FindConnection(BlockIndex from,
                                                           BlockIndex to) const {
  if (connections_.empty()) return std::nullopt;
  auto it = connections_.find(PairKey(from, to));
  if (it == connections_.end()) return std::nullopt;
  return it->second;
}

const std::vector<BlockIndex>& NetworkState::ExclusiveTargets(BlockIndex from) const {
  return exclusive_out_[from];
}

const std::vector<BlockIndex>& NetworkState::ExtraTargets(BlockIndex from) const {
  return extra_out_[from];
}

std::vector<std::tuple<BlockIndex, BlockIndex, ConnectionKind>>
NetworkState::AllConnections() const {
  std::vector<std::tuple<BlockIndex, BlockIndex, ConnectionKind>> out;
  out.reserve(connections_.size());
  for (const auto& [key, kind] : connections_) {
    out.emplace_back(static_cast<BlockIndex>(key >> 32),
                     static_cast<BlockIndex>(key & 0xffffffffu), kind);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- Requests ----

namespace {

Request MakeRequest(const NetworkState& state, const RequestSpec& spec) {
  if (spec.id.empty()) throw InvalidInput("request id must not be empty");
  if (spec.pickup_earliest >= spec.delivery_latest) {
    throw InvalidInput("request '" + spec.id +
                       "': pickup must precede delivery");
  }
  if (spec.priority < 1) {
    throw InvalidInput("request '" + spec.id + "': priority must be positive");
  }
  CheckCapacity(spec.demand, "request '" + spec.id + "'");
  Request r;
  r.id = spec.id;
  r.origin = state.StationIndexOf(spec.origin);
  r.destination = state.StationIndexOf(spec.destination);
  state.GroupOf(r.origin);
  state.GroupOf(r.destination);
  r.pickup_earliest = spec.pickup_earliest;
  r.delivery_latest = spec.delivery_latest;
  r.demand = spec.demand;
  r.attributes = spec.attributes;
  r.priority = spec.priority;
  r.manual = spec.manual;
  r.product = spec.product;
  for (const std::string& b : spec.required_prefix) {
    r.required_prefix.push_back(state.BlockIndexOf(b));
  }
  return r;
}

}  // namespace

RequestIndex NetworkState::AddRequest(const RequestSpec& spec) {
  Request r = MakeRequest(*this, spec);
  auto [it, inserted] = request_ids_.try_emplace(
      spec.id, static_cast<RequestIndex>(requests_.size()));
  if (inserted) {
    requests_.push_back(std::move(r));
  } else {
    if (requests_[it->second].alive) {
      throw InvalidInput("request '" + spec.id + "' already exists");
    }
    requests_[it->second] = std::move(r);
  }
  Touch();
  return it->second;
}

Request NetworkState::ResolveRequest(const RequestSpec& spec) const {
  return MakeRequest(*this, spec);
}

void NetworkState::UpdateRequest(RequestIndex r, const RequestSpec& spec) {
  Request updated = MakeRequest(*this, spec);
  Request& cur = requests_.at(r);
  const bool holds = cur.HoldsCapacity();
  if (holds) AddUsage(r, -1);
  updated.status = cur.status;
  updated.chain = std::move(cur.chain);
  updated.reject_reason = std::move(cur.reject_reason);
  updated.promised_arrival = cur.promised_arrival;
  cur = std::move(updated);
  if (holds) AddUsage(r, +1);
  Touch();
}

void NetworkState::CancelRequest(RequestIndex r) {
  ClearChain(r, RequestStatus::kUnassigned);
  requests_.at(r).alive = false;
  Touch();
}

std::optional<RequestIndex> NetworkState::FindRequest(std::string_view id) const {
  auto it = request_ids_.find(std::string(id));
  if (it == request_ids_.end() || !requests_[it->second].alive) {
    return std::nullopt;
  }
  return it->second;
}

RequestIndex NetworkState::RequestIndexOf(std::string_view id) const {
  auto found = FindRequest(id);
  if (!found) throw LookupError("unknown request '" + std::string(id) + "'");
  return *found;
}

void NetworkState::SetPromisedArrival(RequestIndex r,
                                      std::optional<Minutes> promise) {
  requests_.at(r).promised_arrival = promise;
  Touch();
}

void NetworkState::SetRejected(RequestIndex r, std::string reason) {
  ClearChain(r, RequestStatus::kRejected);
  requests_[r].reject_reason = std::move(reason);
}

void NetworkState::AddUsage(RequestIndex r, int sign) {
  const Request& req = requests_[r];
  const CapacityVector delta = req.demand * sign;
  for (BlockIndex b : req.chain.blocks) {
    block_usage_[b] += delta;
    for (SegmentIndex s : blocks_[b].segments) segment_usage_[s] += delta;
    auto& reqs = block_requests_[b];
    if (sign > 0) {
      if (std::find(reqs.begin(), reqs.end(), r) == reqs.end()) reqs.push_back(r);
    } else {
      EraseValue(reqs, r);
    }
  }
}

void NetworkState::SetChain(RequestIndex r, TransportChain chain,
                            RequestStatus status) {
  Request& req = requests_.at(r);
  for (BlockIndex b : chain.blocks) {
    if (b < 0 || static_cast<std::size_t>(b) >= blocks_.size()) {
      throw LookupError("chain references an unknown block");
    }
  }
  if (chain.split > chain.blocks.size()) {
    throw InvalidInput("chain split beyond its length");
  }
  if (req.HoldsCapacity()) AddUsage(r, -1);
  req.chain = std::move(chain);
  req.status = status;
  if (status != RequestStatus::kRejected) req.reject_reason.clear();
  if (req.HoldsCapacity()) AddUsage(r, +1);
  Touch();
}

void NetworkState::ClearChain(RequestIndex r, RequestStatus status) {
  SetChain(r, TransportChain{}, status);
}

// ---- Ledger ----

CapacityVector NetworkState::SegmentReservations(SegmentIndex s) const {
  CapacityVector sum;
  for (BlockIndex b : SegmentBlocks(s)) sum += blocks_[b].reservation;
  return sum;
}

CapacityVector NetworkState::SegmentManualUtilization(SegmentIndex s) const {
  CapacityVector sum;
  for (BlockIndex b : SegmentBlocks(s)) sum += blocks_[b].manual_utilization;
  return sum;
}

std::vector<CapacityVector> NetworkState::RecomputeSegmentUsage() const {
  std::vector<CapacityVector> usage(segments_.size());
  for (const Request& r : requests_) {
    if (!r.HoldsCapacity()) continue;
    for (BlockIndex b : r.chain.blocks) {
      for (SegmentIndex s : blocks_[b].segments) usage[s] += r.demand;
    }
  }
  return usage;
}

std::vector<CapacityVector> NetworkState::RecomputeBlockUsage() const {
  std::vector<CapacityVector> usage(blocks_.size());
  for (const Request& r : requests_) {
    if (!r.HoldsCapacity()) continue;
    for (BlockIndex b : r.chain.blocks) usage[b] += r.demand;
  }
  return usage;
}

bool NetworkState::LedgerConsistent() const {
  return RecomputeSegmentUsage() == segment_usage_ &&
         RecomputeBlockUsage() == block_usage_;
}

void NetworkState::RebuildLedger() {
  block_usage_ = RecomputeBlockUsage();
  segment_usage_ = RecomputeSegmentUsage();
  for (auto& reqs : block_requests_) reqs.clear();
  for (std::size_t r = 0; r < requests_.size(); ++r) {
    if (!requests_[r].HoldsCapacity()) continue;
    for (BlockIndex b : requests_[r].chain.blocks) {
      auto& reqs = block_requests_[b];
      if (std::find(reqs.begin(), reqs.end(), static_cast<RequestIndex>(r)) == reqs.end()) {
        reqs.push_back(static_cast<RequestIndex>(r));
      }
    }
  }
  Touch();
}

// ---- Indexes ----

const NetworkState::SearchIndex& NetworkState::Index() const {
  if (index_.built_for == network_version_) return index_;
  SearchIndex idx;
  idx.built_for = network_version_;
  idx.departing.assign(group_names_.size(), {});
  idx.departing_with_extra.assign(group_names_.size(), {});
  idx.segment_blocks.assign(segments_.size(), {});
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto b = static_cast<BlockIndex>(i);
    const Block& blk = blocks_[i];
    if (!blk.alive) continue;
    for (SegmentIndex s : blk.segments) idx.segment_blocks[s].push_back(b);
    if (!Searchable(b)) continue;
    const GroupIndex g = GroupOf(blk.origin);
    idx.departing[g].push_back(b);
    if (!extra_out_[i].empty()) idx.departing_with_extra[g].push_back(b);
  }
  for (auto& list : idx.departing) {
    std::sort(list.begin(), list.end(), [this](BlockIndex a, BlockIndex b) {
      const Minutes ta = blocks_[a].boarding_cutoff;
      const Minutes tb = blocks_[b].boarding_cutoff;
      return ta != tb ? ta < tb : a < b;
    });
  }
  index_ = std::move(idx);
  return index_;
}

const std::vector<BlockIndex>& NetworkState::SegmentBlocks(SegmentIndex s) const {
  return Index().segment_blocks[s];
}

const std::vector<BlockIndex>& NetworkState::DepartingBlocks(GroupIndex g) const {
  return Index().departing[g];
}

const std::vector<BlockIndex>& NetworkState::DepartingBlocksWithExtra(
    GroupIndex g) const {
  return Index().departing_with_extra[g];
}

}  // namespace chainplan
