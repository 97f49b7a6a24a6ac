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

#include "chainplan/messages.h"

#include <array>
#include <chrono>
#include <cstdio>
#include <map>

namespace chainplan {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumMessageKinds> kKindNames = {
    "init-state",         "upsert-train",       "delete-train",      "upsert-block",
    "upsert-segment",     "upsert-connection",  "upsert-restriction", "upsert-reservation",
    "book-request",       "update-request",     "cancel-request",    "manual-chain",
    "trigger-compute",
};

const json& Field(const json& j, const char* name) {
  if (!j.is_object()) throw InvalidInput(std::string("expected an object around '") + name + "'");
  auto it = j.find(name);
  if (it == j.end()) throw InvalidInput(std::string("missing field '") + name + "'");
  return *it;
}

std::string Str(const json& j, const char* name) {
  const json& v = Field(j, name);
  if (!v.is_string()) throw InvalidInput(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

template <typename T>
T Opt(const json& j, const char* name, T fallback) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

Minutes Instant(const json& j, const char* name) {
  return ParseInstant(Str(j, name));
}

std::vector<std::string> Strings(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) return {};
  return it->get<std::vector<std::string>>();
}

Station StationFromJson(const json& j) {
  Station s;
  s.id = Str(j, "id");
  const std::string kind = Opt<std::string>(j, "kind", "operational");
  if (kind == "commercial") {
    s.kind = StationKind::kCommercial;
  } else if (kind == "operational") {
    s.kind = StationKind::kOperational;
  } else {
    throw InvalidInput("station '" + s.id + "': unknown kind '" + kind + "'");
  }
  s.group = Opt<std::string>(j, "group", "");
  s.operational = Opt<std::string>(j, "operational", "");
  return s;
}

json StationToJson(const Station& s) {
  json j = {{"id", s.id},
            {"kind", s.kind == StationKind::kCommercial ? "commercial" : "operational"}};
  if (!s.group.empty()) j["group"] = s.group;
  if (!s.operational.empty()) j["operational"] = s.operational;
  return j;
}

SegmentSpec SegmentFromJson(const json& j, const std::string& train) {
  SegmentSpec s;
  s.id = Str(j, "id");
  s.train = j.contains("train") ? Str(j, "train") : train;
  s.from = Str(j, "from");
  s.to = Str(j, "to");
  s.departure = Instant(j, "departure");
  s.arrival = Instant(j, "arrival");
  s.capacity = CapacityFromJson(Field(j, "capacity"));
  return s;
}

json SegmentToJson(const SegmentSpec& s) {
  return {{"id", s.id},
          {"train", s.train},
          {"from", s.from},
          {"to", s.to},
          {"departure", FormatInstant(s.departure)},
          {"arrival", FormatInstant(s.arrival)},
          {"capacity", CapacityToJson(s.capacity)}};
}

TrainSpec TrainFromJson(const json& j) {
  TrainSpec t;
  t.id = Str(j, "id");
  for (const json& s : Field(j, "segments")) t.segments.push_back(SegmentFromJson(s, t.id));
  return t;
}

json TrainToJson(const TrainSpec& t) {
  json segs = json::array();
  for (const SegmentSpec& s : t.segments) segs.push_back(SegmentToJson(s));
  return {{"id", t.id}, {"segments", segs}};
}

Restriction RestrictionFromJson(const json& j) {
  Restriction r;
  const std::string attr = Str(j, "attribute");
  const auto parsed = ParseAttribute(attr);
  if (!parsed) throw InvalidInput("unknown restriction attribute '" + attr + "'");
  r.attribute = *parsed;
  const std::string mode = Str(j, "mode");
  if (mode == "allow") {
    r.mode = RestrictionMode::kAllow;
  } else if (mode == "forbid") {
    r.mode = RestrictionMode::kForbid;
  } else {
    throw InvalidInput("unknown restriction mode '" + mode + "'");
  }
  for (const std::string& v : Strings(j, "values")) r.values.insert(v);
  return r;
}

json RestrictionToJson(const Restriction& r) {
  return {{"attribute", AttributeName(r.attribute)},
          {"mode", r.mode == RestrictionMode::kAllow ? "allow" : "forbid"},
          {"values", std::vector<std::string>(r.values.begin(), r.values.end())}};
}

std::vector<Restriction> RestrictionsFromJson(const json& j) {
  std::vector<Restriction> out;
  for (const json& r : j) out.push_back(RestrictionFromJson(r));
  return out;
}

json RestrictionsToJson(const std::vector<Restriction>& rs) {
  json out = json::array();
  for (const Restriction& r : rs) out.push_back(RestrictionToJson(r));
  return out;
}

BlockSpec BlockFromJson(const json& j) {
  BlockSpec b;
  b.id = Str(j, "id");
  b.segments = Strings(j, "segments");
  b.origin = Str(j, "origin");
  b.destination = Str(j, "destination");
  b.boarding_cutoff = Instant(j, "boarding_cutoff");
  b.deboarding_ready = Instant(j, "deboarding_ready");
  if (j.contains("restrictions")) b.restrictions = RestrictionsFromJson(j["restrictions"]);
  if (j.contains("reservation")) b.reservation = CapacityFromJson(j["reservation"]);
  if (j.contains("manual_utilization")) {
    b.manual_utilization = CapacityFromJson(j["manual_utilization"]);
  }
  b.bookable = Opt<bool>(j, "bookable", true);
  b.manual = Opt<bool>(j, "manual", false);
  b.phase_connector = Opt<bool>(j, "phase_connector", false);
  return b;
}

json BlockToJson(const BlockSpec& b) {
  json j = {{"id", b.id},
            {"segments", b.segments},
            {"origin", b.origin},
            {"destination", b.destination},
            {"boarding_cutoff", FormatInstant(b.boarding_cutoff)},
            {"deboarding_ready", FormatInstant(b.deboarding_ready)}};
  if (!b.restrictions.empty()) j["restrictions"] = RestrictionsToJson(b.restrictions);
  if (!b.reservation.IsZero()) j["reservation"] = CapacityToJson(b.reservation);
  if (!b.manual_utilization.IsZero()) {
    j["manual_utilization"] = CapacityToJson(b.manual_utilization);
  }
  if (!b.bookable) j["bookable"] = false;
  if (b.manual) j["manual"] = true;
  if (b.phase_connector) j["phase_connector"] = true;
  return j;
}

ConnectionSpec ConnectionFromJson(const json& j) {
  ConnectionSpec c;
  c.from = Str(j, "from");
  c.to = Str(j, "to");
  const std::string kind = Opt<std::string>(j, "kind", "none");
  if (kind != "none") {
    c.kind = ParseConnectionKind(kind);
    if (!c.kind) throw InvalidInput("unknown connection kind '" + kind + "'");
  }
  return c;
}

json ConnectionToJson(const ConnectionSpec& c) {
  return {{"from", c.from},
          {"to", c.to},
          {"kind", c.kind ? std::string(ConnectionKindName(*c.kind)) : "none"}};
}

RequestStatus StatusFromName(const std::string& name) {
  for (RequestStatus s : {RequestStatus::kUnassigned, RequestStatus::kAssigned,
                          RequestStatus::kPartial, RequestStatus::kRejected,
                          RequestStatus::kManual}) {
    if (RequestStatusName(s) == name) return s;
  }
  throw InvalidInput("unknown request status '" + name + "'");
}

json ChainSpecToJson(const ChainSpec& c) {
  return {{"blocks", c.blocks}, {"split", c.split}};
}

RequestRecord RecordFromJson(const json& j) {
  RequestRecord r;
  r.spec = RequestSpecFromJson(j);
  r.status = StatusFromName(Opt<std::string>(j, "status", "unassigned"));
  if (j.contains("chain")) r.chain = ChainSpecFromJson(j["chain"]);
  if (j.contains("promised_arrival") && !j["promised_arrival"].is_null()) {
    r.promised_arrival = Instant(j, "promised_arrival");
  }
  return r;
}

json RecordToJson(const RequestRecord& r) {
  json j = RequestSpecToJson(r.spec);
  j["status"] = RequestStatusName(r.status);
  if (!r.chain.blocks.empty()) j["chain"] = ChainSpecToJson(r.chain);
  if (r.promised_arrival) j["promised_arrival"] = FormatInstant(*r.promised_arrival);
  return j;
}

MessagePayload PayloadFromJson(MessageKind kind, const json& p) {
  switch (kind) {
    case MessageKind::kInitState: {
      InitState s;
      for (const json& x : p.value("stations", json::array())) {
        s.stations.push_back(StationFromJson(x));
      }
      for (const json& x : p.value("trains", json::array())) s.trains.push_back(TrainFromJson(x));
      for (const json& x : p.value("blocks", json::array())) s.blocks.push_back(BlockFromJson(x));
      for (const json& x : p.value("connections", json::array())) {
        s.connections.push_back(ConnectionFromJson(x));
      }
      for (const json& x : p.value("requests", json::array())) {
        s.requests.push_back(RecordFromJson(x));
      }
      return s;
    }
    case MessageKind::kUpsertTrain:
      return TrainFromJson(p);
    case MessageKind::kDeleteTrain:
      return DeleteTrain{Str(p, "id")};
    case MessageKind::kUpsertBlock: {
      BlockUpdate u;
      u.deleted = Opt<bool>(p, "deleted", false);
      if (u.deleted) {
        u.block.id = Str(p, "id");
      } else {
        u.block = BlockFromJson(p);
      }
      return u;
    }
    case MessageKind::kUpsertSegment:
      return SegmentFromJson(p, Str(p, "train"));
    case MessageKind::kUpsertConnection:
      return ConnectionFromJson(p);
    case MessageKind::kUpsertRestriction:
      return RestrictionUpdate{Str(p, "block"), RestrictionsFromJson(Field(p, "restrictions"))};
    case MessageKind::kUpsertReservation:
      return ReservationUpdate{Str(p, "block"), CapacityFromJson(Field(p, "reservation"))};
    case MessageKind::kBookRequest: {
      BookRequest b;
      b.spec = RequestSpecFromJson(p, &b.has_deadline);
      return b;
    }
    case MessageKind::kUpdateRequest: {
      UpdateRequest u;
      u.spec = RequestSpecFromJson(p, &u.has_deadline);
      return u;
    }
    case MessageKind::kCancelRequest:
      return CancelRequest{Str(p, "id")};
    case MessageKind::kManualChain:
      return ManualChain{Str(p, "request"), ChainSpecFromJson(Field(p, "chain"))};
    case MessageKind::kTriggerCompute:
      return TriggerCompute{};
  }
  throw InvalidInput("unknown message kind");
}

struct PayloadWriter {
  json operator()(const InitState& s) const {
    json j = {{"stations", json::array()},
              {"trains", json::array()},
              {"blocks", json::array()},
              {"connections", json::array()},
              {"requests", json::array()}};
    for (const Station& x : s.stations) j["stations"].push_back(StationToJson(x));
    for (const TrainSpec& x : s.trains) j["trains"].push_back(TrainToJson(x));
    for (const BlockSpec& x : s.blocks) j["blocks"].push_back(BlockToJson(x));
    for (const ConnectionSpec& x : s.connections) j["connections"].push_back(ConnectionToJson(x));
    for (const RequestRecord& x : s.requests) j["requests"].push_back(RecordToJson(x));
    return j;
  }
  json operator()(const TrainSpec& t) const { return TrainToJson(t); }
  json operator()(const DeleteTrain& d) const { return {{"id", d.id}}; }
  json operator()(const BlockUpdate& u) const {
    if (u.deleted) return {{"id", u.block.id}, {"deleted", true}};
    return BlockToJson(u.block);
  }
  json operator()(const SegmentSpec& s) const { return SegmentToJson(s); }
  json operator()(const ConnectionSpec& c) const { return ConnectionToJson(c); }
  json operator()(const RestrictionUpdate& r) const {
    return {{"block", r.block}, {"restrictions", RestrictionsToJson(r.restrictions)}};
  }
  json operator()(const ReservationUpdate& r) const {
    return {{"block", r.block}, {"reservation", CapacityToJson(r.reservation)}};
  }
  json operator()(const BookRequest& b) const { return RequestSpecToJson(b.spec, b.has_deadline); }
  json operator()(const UpdateRequest& u) const {
    return RequestSpecToJson(u.spec, u.has_deadline);
  }
  json operator()(const CancelRequest& c) const { return {{"id", c.id}}; }
  json operator()(const ManualChain& m) const {
    return {{"request", m.request}, {"chain", ChainSpecToJson(m.chain)}};
  }
  json operator()(const TriggerCompute&) const { return json::object(); }
};

}  // namespace

Minutes ParseInstant(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0, consumed = 0;
  const std::string t(text);
  if (std::sscanf(t.c_str(), "%4d-%2d-%2dT%2d:%2d%n", &y, &mo, &d, &h, &mi, &consumed) != 5) {
    throw InvalidInput("malformed instant '" + t + "'");
  }
  std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
  if (rest.size() >= 3 && rest[0] == ':') {
    int used = 0;
    if (std::sscanf(t.c_str() + consumed, ":%2d%n", &s, &used) != 1) {
      throw InvalidInput("malformed instant '" + t + "'");
    }
    rest.remove_prefix(static_cast<std::size_t>(used));
  }
  if (rest != "Z" && rest != "+00:00") {
    throw InvalidInput("instant '" + t + "' must be UTC");
  }
  if (s != 0) throw InvalidInput("instant '" + t + "' has non-zero seconds");
  const std::chrono::year_month_day date{std::chrono::year(y), std::chrono::month(mo),
                                         std::chrono::day(d)};
  if (!date.ok() || h > 23 || mi > 59) throw InvalidInput("invalid instant '" + t + "'");
  const auto days = std::chrono::sys_days(date).time_since_epoch().count();
  return static_cast<Minutes>(days) * 1440 + h * 60 + mi;
}

std::string FormatInstant(Minutes t) {
  Minutes days = t / 1440;
  Minutes rem = t % 1440;
  if (rem < 0) {
    rem += 1440;
    --days;
  }
  const std::chrono::year_month_day date{
      std::chrono::sys_days(std::chrono::days(static_cast<int>(days)))};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:00Z", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                static_cast<int>(rem / 60), static_cast<int>(rem % 60));
  return buf;
}

std::string_view MessageKindName(MessageKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

std::optional<MessageKind> ParseMessageKind(std::string_view name) {
  for (std::size_t k = 0; k < kKindNames.size(); ++k) {
    if (kKindNames[k] == name) return static_cast<MessageKind>(k);
  }
  return std::nullopt;
}

CapacityVector CapacityFromJson(const json& j) {
  CapacityVector c;
  c.weight = Field(j, "weight").get<std::int64_t>();
  c.length = Field(j, "length").get<std::int64_t>();
  return c;
}

json CapacityToJson(const CapacityVector& c) {
  return {{"weight", c.weight}, {"length", c.length}};
}

RequestSpec RequestSpecFromJson(const json& j, bool* has_deadline) {
  try {
    RequestSpec r;
    r.id = Str(j, "id");
    r.origin = Str(j, "origin");
    r.destination = Str(j, "destination");
    r.pickup_earliest = Instant(j, "pickup_earliest");
    const bool deadline = j.contains("delivery_latest") && !j["delivery_latest"].is_null();
    if (deadline) {
      r.delivery_latest = Instant(j, "delivery_latest");
    } else if (has_deadline == nullptr) {
      throw InvalidInput("missing field 'delivery_latest'");
    }
    if (has_deadline != nullptr) *has_deadline = deadline;
    r.demand = CapacityFromJson(Field(j, "demand"));
    if (j.contains("attributes")) {
      r.attributes = j["attributes"].get<std::map<std::string, std::string>>();
    }
    r.priority = Opt<int>(j, "priority", 1);
    r.manual = Opt<bool>(j, "manual", false);
    r.product = Opt<std::string>(j, "product", "");
    r.required_prefix = Strings(j, "required_prefix");
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("request: ") + e.what());
  }
}

json RequestSpecToJson(const RequestSpec& r, bool with_deadline) {
  json j = {{"id", r.id},
            {"origin", r.origin},
            {"destination", r.destination},
            {"pickup_earliest", FormatInstant(r.pickup_earliest)},
            {"demand", CapacityToJson(r.demand)}};
  if (with_deadline) j["delivery_latest"] = FormatInstant(r.delivery_latest);
  if (!r.attributes.empty()) j["attributes"] = r.attributes;
  if (r.priority != 1) j["priority"] = r.priority;
  if (r.manual) j["manual"] = true;
  if (!r.product.empty()) j["product"] = r.product;
  if (!r.required_prefix.empty()) j["required_prefix"] = r.required_prefix;
  return j;
}

ChainSpec ChainSpecFromJson(const json& j) {
  ChainSpec c;
  c.blocks = Strings(j, "blocks");
  c.split = Opt<std::size_t>(j, "split", 0);
  return c;
}

json ChainToJson(const NetworkState& state, const TransportChain& chain) {
  json blocks = json::array();
  for (BlockIndex b : chain.blocks) blocks.push_back(state.block(b).id);
  return {{"blocks", blocks}, {"split", chain.split}};
}

json ViolationsToJson(const ValidationResult& result) {
  json out = json::array();
  for (const Violation& v : result.violations) {
    out.push_back({{"reason", ViolationName(v.kind)},
                   {"position", v.position},
                   {"detail", v.detail}});
  }
  return out;
}

Message MessageFromJson(const json& j) {
  try {
    const std::string name = Str(j, "kind");
    const auto kind = ParseMessageKind(name);
    if (!kind) throw InvalidInput("unknown message kind '" + name + "'");
    Message m;
    m.defer = Opt<bool>(j, "defer", false);
    static const json kEmpty = json::object();
    const json& payload = j.contains("payload") ? j["payload"] : kEmpty;
    m.payload = PayloadFromJson(*kind, payload);
    return m;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("message: ") + e.what());
  }
}

json MessageToJson(const Message& m) {
  json j = {{"kind", MessageKindName(m.kind())},
            {"payload", std::visit(PayloadWriter{}, m.payload)}};
  if (m.defer) j["defer"] = true;
  return j;
}

InitState ExportState(const NetworkState& state) {
  InitState s;
  for (std::size_t i = 0; i < state.num_stations(); ++i) {
    s.stations.push_back(state.station(static_cast<StationIndex>(i)));
  }
  std::map<std::string, std::vector<SegmentIndex>> trains;
  for (std::size_t i = 0; i < state.num_segments(); ++i) {
    const Segment& seg = state.segment(static_cast<SegmentIndex>(i));
    if (seg.alive) trains[seg.train].push_back(static_cast<SegmentIndex>(i));
  }
  for (auto& [id, segs] : trains) {
    std::stable_sort(segs.begin(), segs.end(), [&](SegmentIndex a, SegmentIndex b) {
      return state.segment(a).departure < state.segment(b).departure;
    });
    TrainSpec t{id, {}};
    for (SegmentIndex i : segs) {
      const Segment& seg = state.segment(i);
      t.segments.push_back({seg.id, seg.train, state.station(seg.from).id,
                            state.station(seg.to).id, seg.departure, seg.arrival,
                            seg.capacity});
    }
    s.trains.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < state.num_blocks(); ++i) {
    const Block& blk = state.block(static_cast<BlockIndex>(i));
    if (!blk.alive) continue;
    BlockSpec b;
    b.id = blk.id;
    for (SegmentIndex seg : blk.segments) b.segments.push_back(state.segment(seg).id);
    b.origin = state.station(blk.origin).id;
    b.destination = state.station(blk.destination).id;
    b.boarding_cutoff = blk.boarding_cutoff;
    b.deboarding_ready = blk.deboarding_ready;
    b.restrictions = blk.restrictions;
    b.reservation = blk.reservation;
    b.manual_utilization = blk.manual_utilization;
    b.bookable = blk.bookable;
    b.manual = blk.manual;
    b.phase_connector = blk.phase_connector;
    s.blocks.push_back(std::move(b));
  }
  for (const auto& [from, to, kind] : state.AllConnections()) {
    s.connections.push_back({state.block(from).id, state.block(to).id, kind});
  }
  for (std::size_t i = 0; i < state.num_requests(); ++i) {
    const Request& req = state.request(static_cast<RequestIndex>(i));
    if (!req.alive) continue;
    RequestRecord r;
    r.spec.id = req.id;
    r.spec.origin = state.station(req.origin).id;
    r.spec.destination = state.station(req.destination).id;
    r.spec.pickup_earliest = req.pickup_earliest;
    r.spec.delivery_latest = req.delivery_latest;
    r.spec.demand = req.demand;
    r.spec.attributes = req.attributes;
    r.spec.priority = req.priority;
    r.spec.manual = req.manual;
    r.spec.product = req.product;
    for (BlockIndex b : req.required_prefix) r.spec.required_prefix.push_back(state.block(b).id);
    r.status = req.status;
    for (BlockIndex b : req.chain.blocks) r.chain.blocks.push_back(state.block(b).id);
    r.chain.split = req.chain.split;
    r.promised_arrival = req.promised_arrival;
    s.requests.push_back(std::move(r));
  }
  return s;
}

}  // namespace chainplan
