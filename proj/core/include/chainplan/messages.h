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

// Wire schema shared by the HTTP service and the scenario tools.
//
// A message is {"kind": ..., "defer": bool, "payload": {...}}. Instants are
// ISO-8601 UTC strings ("2026-03-02T04:30:00Z"); internally they are minutes
// since 1970-01-01T00:00Z. Capacities are {"weight": dt, "length": dm}.

#ifndef CHAINPLAN_MESSAGES_H_
#define CHAINPLAN_MESSAGES_H_

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainplan/chain_rules.h"
#include "chainplan/network_state.h"

namespace chainplan {

// Parses "YYYY-MM-DDTHH:MM[:SS]Z" (or "+00:00"); seconds must be zero.
Minutes ParseInstant(std::string_view text);
std::string FormatInstant(Minutes t);

enum class MessageKind {
  kInitState,
  kUpsertTrain,
  kDeleteTrain,
  kUpsertBlock,
  kUpsertSegment,
  kUpsertConnection,
  kUpsertRestriction,
  kUpsertReservation,
  kBookRequest,
  kUpdateRequest,
  kCancelRequest,
  kManualChain,
  kTriggerCompute,
};
inline constexpr int kNumMessageKinds = 13;

std::string_view MessageKindName(MessageKind kind);
std::optional<MessageKind> ParseMessageKind(std::string_view name);

struct TrainSpec {
  std::string id;
  std::vector<SegmentSpec> segments;
};

struct ConnectionSpec {
  std::string from;
  std::string to;
  // Empty removes the connection.
  std::optional<ConnectionKind> kind;
};

struct ChainSpec {
  std::vector<std::string> blocks;
  std::size_t split = 0;
};

// A request as carried by init-state, optionally with its current chain.
struct RequestRecord {
  RequestSpec spec;
  RequestStatus status = RequestStatus::kUnassigned;
  ChainSpec chain;
  std::optional<Minutes> promised_arrival;
};

struct InitState {
  std::vector<Station> stations;
  std::vector<TrainSpec> trains;
  std::vector<BlockSpec> blocks;
  std::vector<ConnectionSpec> connections;
  std::vector<RequestRecord> requests;
};

struct DeleteTrain {
  std::string id;
};

struct BlockUpdate {
  BlockSpec block;
  bool deleted = false;
};

struct RestrictionUpdate {
  std::string block;
  std::vector<Restriction> restrictions;
};

struct ReservationUpdate {
  std::string block;
  CapacityVector reservation;
};

// Booking; a missing deadline is derived from the product table.
struct BookRequest {
  RequestSpec spec;
  bool has_deadline = true;
};

struct UpdateRequest {
  RequestSpec spec;
  bool has_deadline = true;
};

struct CancelRequest {
  std::string id;
};

struct ManualChain {
  std::string request;
  ChainSpec chain;
};

struct TriggerCompute {};

using MessagePayload =
    std::variant<InitState, TrainSpec, DeleteTrain, BlockUpdate, SegmentSpec, ConnectionSpec,
                 RestrictionUpdate, ReservationUpdate, BookRequest, UpdateRequest,
                 CancelRequest, ManualChain, TriggerCompute>;

// Payload alternatives follow MessageKind order.
struct Message {
  MessagePayload payload = TriggerCompute{};
  bool defer = false;

  MessageKind kind() const { return static_cast<MessageKind>(payload.index()); }
};

// Both throw InvalidInput naming the offending field.
Message MessageFromJson(const nlohmann::json& j);
nlohmann::json MessageToJson(const Message& m);

RequestSpec RequestSpecFromJson(const nlohmann::json& j, bool* has_deadline = nullptr);
nlohmann::json RequestSpecToJson(const RequestSpec& spec, bool with_deadline = true);
CapacityVector CapacityFromJson(const nlohmann::json& j);
nlohmann::json CapacityToJson(const CapacityVector& c);
ChainSpec ChainSpecFromJson(const nlohmann::json& j);
nlohmann::json ChainToJson(const NetworkState& state, const TransportChain& chain);
nlohmann::json ViolationsToJson(const ValidationResult& result);

// Snapshot of a state as an init-state payload, chains included.
InitState ExportState(const NetworkState& state);

}  // namespace chainplan

#endif  // CHAINPLAN_MESSAGES_H_
