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

// The in-memory world: stations, trains, segments, blocks, connections,
// requests and their current chains, plus the per-block and per-segment
// usage ledger.
//
// Objects are interned into dense indices that stay stable for the lifetime
// of the state (deleting an object only marks it dead, re-adding the same id
// revives the same index). Only the backend worker mutates a NetworkState.

#ifndef CHAINPLAN_NETWORK_STATE_H_
#define CHAINPLAN_NETWORK_STATE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chainplan/types.h"

namespace chainplan {

enum class StationKind { kCommercial, kOperational };

struct Station {
  std::string id;
  StationKind kind = StationKind::kOperational;
  // Operation-point group; empty means the station forms its own group.
  std::string group;
  // Commercial stations only: the operational station they map to. Empty
  // means the operational station with the same id.
  std::string operational;
};

enum class RestrictionAttribute {
  kOrigin,
  kDestination,
  kCustomer,
  kNhmCode,
  kProductType,
  kMaxSpeed,
  kCoupling,
};

enum class RestrictionMode { kAllow, kForbid };

struct Restriction {
  RestrictionAttribute attribute = RestrictionAttribute::kCustomer;
  RestrictionMode mode = RestrictionMode::kAllow;
  std::set<std::string> values;

  friend bool operator==(const Restriction&, const Restriction&) = default;
};

std::string_view AttributeName(RestrictionAttribute attribute);
std::optional<RestrictionAttribute> ParseAttribute(std::string_view name);

enum class ConnectionKind { kForbidden, kExtra, kExclusive };

std::string_view ConnectionKindName(ConnectionKind kind);
std::optional<ConnectionKind> ParseConnectionKind(std::string_view name);

struct SegmentSpec {
  std::string id;
  std::string train;
  std::string from;
  std::string to;
  Minutes departure = 0;
  Minutes arrival = 0;
  CapacityVector capacity;
};

struct Segment {
  std::string id;
  std::string train;
  StationIndex from = -1;
  StationIndex to = -1;
  Minutes departure = 0;
  Minutes arrival = 0;
  CapacityVector capacity;
  bool alive = true;
};

struct BlockSpec {
  std::string id;
  std::vector<std::string> segments;
  std::string origin;
  std::string destination;
  Minutes boarding_cutoff = 0;
  Minutes deboarding_ready = 0;
  std::vector<Restriction> restrictions;
  CapacityVector reservation;
  CapacityVector manual_utilization;
  bool bookable = true;
  bool manual = false;
  bool phase_connector = false;
};

struct Block {
  std::string id;
  std::vector<SegmentIndex> segments;
  StationIndex origin = -1;
  StationIndex destination = -1;
  Minutes boarding_cutoff = 0;
  Minutes deboarding_ready = 0;
  std::vector<Restriction> restrictions;
  CapacityVector reservation;
  CapacityVector manual_utilization;
  bool bookable = true;
  bool manual = false;
  bool phase_connector = false;
  bool alive = true;
};

// An ordered block sequence. Positions [0, split) are required, the rest is
// flexible.
struct TransportChain {
  std::vector<BlockIndex> blocks;
  std::size_t split = 0;

  bool empty() const { return blocks.empty(); }
  std::size_t size() const { return blocks.size(); }
  std::span<const BlockIndex> required() const {
    return std::span<const BlockIndex>(blocks).first(split);
  }
  std::span<const BlockIndex> flexible() const {
    return std::span<const BlockIndex>(blocks).subspan(split);
  }
  friend bool operator==(const TransportChain&, const TransportChain&) = default;
};

enum class RequestStatus { kUnassigned, kAssigned, kPartial, kRejected, kManual };

std::string_view RequestStatusName(RequestStatus status);

struct RequestSpec {
  std::string id;
  std::string origin;
  std::string destination;
  Minutes pickup_earliest = 0;
  Minutes delivery_latest = 0;
  CapacityVector demand;
  std::map<std::string, std::string> attributes;
  int priority = 1;
  bool manual = false;
  std::string product;
  std::vector<std::string> required_prefix;
};

struct Request {
  std::string id;
  StationIndex origin = -1;
  StationIndex destination = -1;
  Minutes pickup_earliest = 0;
  Minutes delivery_latest = 0;
  CapacityVector demand;
  std::map<std::string, std::string> attributes;
  int priority = 1;
  bool manual = false;
  std::string product;
  std::vector<BlockIndex> required_prefix;

  RequestStatus status = RequestStatus::kUnassigned;
  TransportChain chain;
  std::string reject_reason;
  std::optional<Minutes> promised_arrival;
  bool alive = true;

  // True when the request's chain is part of the usage ledger.
  bool HoldsCapacity() const {
    return alive && (status == RequestStatus::kAssigned ||
                     status == RequestStatus::kPartial ||
                     status == RequestStatus::kManual);
  }
};

class NetworkState {
 public:
  NetworkState() = default;

  // Drops everything, including the version counters' meaning: versions keep
  // increasing so that caches tagged with an old version stay stale.
  void Reset();

  // Monotone counter bumped by every mutation.
  std::uint64_t version() const { return version_; }
  // Bumped by mutations of the train network only (not by assignments).
  std::uint64_t network_version() const { return network_version_; }

  // ---- Stations ----
  StationIndex UpsertStation(const Station& station);
  std::optional<StationIndex> FindStation(std::string_view id) const;
  StationIndex StationIndexOf(std::string_view id) const;
  const Station& station(StationIndex i) const { return stations_[i]; }
  std::size_t num_stations() const { return stations_.size(); }
  // Operation-point group of a station; commercial stations resolve through
  // their operational mapping.
  GroupIndex GroupOf(StationIndex station) const;
  std::size_t num_groups() const { return group_names_.size(); }
  const std::string& group_name(GroupIndex g) const { return group_names_[g]; }

  // ---- Segments and trains ----
  SegmentIndex UpsertSegment(const SegmentSpec& spec);
  // Replaces all segments of a train; the segments must form a time-ordered
  // path. Blocks using a dropped segment die.
  std::vector<SegmentIndex> UpsertTrain(std::string_view train,
                                        std::span<const SegmentSpec> segments);
  // Kills the train's segments and every block using them. Returns the
  // killed blocks.
  std::vector<BlockIndex> DeleteTrain(std::string_view train);
  // Current segments of a train; empty for unknown trains.
  std::vector<SegmentIndex> TrainSegments(std::string_view train) const;
  std::optional<SegmentIndex> FindSegment(std::string_view id) const;
  SegmentIndex SegmentIndexOf(std::string_view id) const;
  const Segment& segment(SegmentIndex i) const { return segments_[i]; }
  std::size_t num_segments() const { return segments_.size(); }

  // ---- Blocks ----
  BlockIndex UpsertBlock(const BlockSpec& spec);
  void DeleteBlock(BlockIndex b);
  void SetRestrictions(BlockIndex b, std::vector<Restriction> restrictions);
  void SetReservation(BlockIndex b, const CapacityVector& reservation);
  std::optional<BlockIndex> FindBlock(std::string_view id) const;
  BlockIndex BlockIndexOf(std::string_view id) const;
  const Block& block(BlockIndex i) const { return blocks_[i]; }
  std::size_t num_blocks() const { return blocks_.size(); }
  GroupIndex OriginGroup(BlockIndex b) const { return GroupOf(blocks_[b].origin); }
  GroupIndex DestinationGroup(BlockIndex b) const {
    return GroupOf(blocks_[b].destination);
  }
  // Departure of the first segment; phase connectors depart at their
  // boarding cutoff.
  Minutes BlockDeparture(BlockIndex b) const;

  // ---- Connections ----
  void SetConnection(BlockIndex from, BlockIndex to, ConnectionKind kind);
  void RemoveConnection(BlockIndex from, BlockIndex to);
  std::optional<ConnectionKind> FindConnection(BlockIndex from,
                                               BlockIndex to) const;
  const std::vector<BlockIndex>& ExclusiveTargets(BlockIndex from) const;
  const std::vector<BlockIndex>& ExtraTargets(BlockIndex from) const;
  std::size_t num_connections() const { return connections_.size(); }
  // Ordered (from, to, kind) triples, for serialization.
  std::vector<std::tuple<BlockIndex, BlockIndex, ConnectionKind>>
  AllConnections() const;

  // ---- Requests ----
  RequestIndex AddRequest(const RequestSpec& spec);
  // Resolves a spec against the state without adding it.
  Request ResolveRequest(const RequestSpec& spec) const;
  // Replaces the request's data, keeping its chain and status.
  void UpdateRequest(RequestIndex r, const RequestSpec& spec);
  // Releases capacity and marks the request dead.
  void CancelRequest(RequestIndex r);
  std::optional<RequestIndex> FindRequest(std::string_view id) const;
  RequestIndex RequestIndexOf(std::string_view id) const;
  const Request& request(RequestIndex i) const { return requests_[i]; }
  std::size_t num_requests() const { return requests_.size(); }
  void SetPromisedArrival(RequestIndex r, std::optional<Minutes> promise);
  void SetRejected(RequestIndex r, std::string reason);

  // Sets the request's chain and status and updates the ledger.
  void SetChain(RequestIndex r, TransportChain chain, RequestStatus status);
  void ClearChain(RequestIndex r, RequestStatus status = RequestStatus::kUnassigned);

  // ---- Ledger ----
  // Demand of requests holding capacity on the block (counted per
  // occurrence in a chain).
  const CapacityVector& BlockUsage(BlockIndex b) const { return block_usage_[b]; }
  // Request usage plus the block's manual utilization.
  CapacityVector BlockLoad(BlockIndex b) const {
    return block_usage_[b] + blocks_[b].manual_utilization;
  }
  const CapacityVector& SegmentUsage(SegmentIndex s) const {
    return segment_usage_[s];
  }
  // Sum over alive blocks containing the segment.
  CapacityVector SegmentReservations(SegmentIndex s) const;
  CapacityVector SegmentManualUtilization(SegmentIndex s) const;
  // From-scratch recomputation of the segment ledger.
  std::vector<CapacityVector> RecomputeSegmentUsage() const;
  std::vector<CapacityVector> RecomputeBlockUsage() const;
  bool LedgerConsistent() const;
  // Rebuilds the ledger from the chains.
  void RebuildLedger();

  // ---- Indexes ----
  // Alive blocks containing the segment, in index order.
  const std::vector<BlockIndex>& SegmentBlocks(SegmentIndex s) const;
  // Requests holding capacity whose chain contains the block.
  const std::vector<RequestIndex>& BlockRequests(BlockIndex b) const {
    return block_requests_[b];
  }
  // Searchable blocks (alive, bookable, not manual) leaving a group, sorted
  // by boarding cutoff then index.
  const std::vector<BlockIndex>& DepartingBlocks(GroupIndex g) const;
  // Searchable blocks of a group having outgoing extra connections.
  const std::vector<BlockIndex>& DepartingBlocksWithExtra(GroupIndex g) const;
  bool Searchable(BlockIndex b) const {
    const Block& blk = blocks_[b];
    return blk.alive && blk.bookable && !blk.manual;
  }

 private:
  struct SearchIndex {
    std::uint64_t built_for = ~std::uint64_t{0};
    std::vector<std::vector<BlockIndex>> departing;
    std::vector<std::vector<BlockIndex>> departing_with_extra;
    std::vector<std::vector<BlockIndex>> segment_blocks;
  };

  static std::uint64_t PairKey(BlockIndex a, BlockIndex b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }
  void TouchNetwork();
  void Touch() { ++version_; }
  GroupIndex InternGroup(const std::string& name);
  void RefreshGroups() const;
  const SearchIndex& Index() const;
  void AddUsage(RequestIndex r, int sign);
  void CheckBlockInvariants(const Block& block) const;

  std::uint64_t version_ = 0;
  std::uint64_t network_version_ = 0;

  std::vector<Station> stations_;
  std::unordered_map<std::string, StationIndex> station_ids_;
  std::vector<std::string> group_names_;
  std::unordered_map<std::string, GroupIndex> group_ids_;
  mutable std::vector<GroupIndex> station_groups_;
  mutable bool groups_dirty_ = true;

  std::vector<Segment> segments_;
  std::unordered_map<std::string, SegmentIndex> segment_ids_;
  std::map<std::string, std::vector<SegmentIndex>, std::less<>> trains_;

  std::vector<Block> blocks_;
  std::unordered_map<std::string, BlockIndex> block_ids_;

  std::unordered_map<std::uint64_t, ConnectionKind> connections_;
  std::vector<std::vector<BlockIndex>> exclusive_out_;
  std::vector<std::vector<BlockIndex>> extra_out_;

  std::vector<Request> requests_;
  std::unordered_map<std::string, RequestIndex> request_ids_;

  std::vector<CapacityVector> block_usage_;
  std::vector<CapacityVector> segment_usage_;
  std::vector<std::vector<RequestIndex>> block_requests_;

  mutable SearchIndex index_;
};

}  // namespace chainplan

#endif  // CHAINPLAN_NETWORK_STATE_H_
