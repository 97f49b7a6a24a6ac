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

#include "scenario.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "chainplan/chain_search.h"
#include "chainplan/network_state.h"

namespace chainplan::sim {
namespace {

using nlohmann::json;

constexpr Minutes kDay = 24 * 60;
constexpr Minutes kYardBuffer = 60;
constexpr Minutes kSpokeBoardBuffer = 20;
constexpr Minutes kSpokeDeboardBuffer = 30;

void Require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput("scenario: " + what);
}

void CheckKeys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw InvalidInput(std::string("scenario: ") + where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw InvalidInput(std::string("scenario: unknown key '") + k + "' in " + where);
    }
  }
}

template <typename T>
void Read(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

std::string Numbered(char prefix, int n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*d", prefix, width, n);
  return buf;
}

struct Stop {
  std::string station;
  bool yard = false;
  Minutes arrival = 0;
  Minutes departure = 0;
};

// Builds the network side of the init-state.
class NetworkBuilder {
 public:
  NetworkBuilder(const ScenarioSpec& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {}

  void Build() {
    for (int y = 0; y < spec_.yards; ++y) {
      yards_.push_back(Numbered('Y', y + 1, 2));
      init_.stations.push_back(Station{yards_.back(), StationKind::kOperational, "", ""});
    }
    spokes_of_.resize(spec_.yards);
    for (int p = 0; p < spec_.spokes(); ++p) {
      const std::string id = Numbered('P', p + 1, 3);
      init_.stations.push_back(Station{id, StationKind::kOperational, "", ""});
      spoke_yard_.push_back(p % spec_.yards);
      spokes_.push_back(id);
      spokes_of_[p % spec_.yards].push_back(p);
    }
    for (int y = 0; y < spec_.yards; ++y) {
      const auto& mine = spokes_of_[y];
      for (std::size_t i = 0; i < mine.size(); i += spec_.spokes_per_line) {
        std::vector<std::string> line;
        for (std::size_t k = i; k < std::min(mine.size(), i + spec_.spokes_per_line); ++k) {
          line.push_back(spokes_[mine[k]]);
        }
        AddFeederLine(yards_[y], line);
      }
    }
    std::uniform_int_distribution<Minutes> trunk_time(150, 300);
    for (int a = 0; a < spec_.yards; ++a) {
      for (int b = a + 1; b < spec_.yards; ++b) {
        const Minutes run = trunk_time(rng_);
        AddCorridor(yards_[a], yards_[b], run);
        AddCorridor(yards_[b], yards_[a], run);
      }
    }
  }

  InitState& init() { return init_; }
  const std::vector<std::string>& spokes() const { return spokes_; }
  const std::vector<int>& spoke_yard() const { return spoke_yard_; }
  const std::vector<std::vector<int>>& spokes_of() const { return spokes_of_; }
  // Train index -> corridor id for trunk trains.
  const std::map<std::size_t, int>& trunk_trains() const { return trunk_trains_; }
  int corridors() const { return corridors_; }

 private:
  void AddFeederLine(const std::string& yard, const std::vector<std::string>& line) {
    std::uniform_int_distribution<Minutes> hop(40, 80);
    std::vector<Minutes> hops;
    for (std::size_t i = 0; i < line.size(); ++i) hops.push_back(hop(rng_));
    std::vector<std::string> out = {yard};
    out.insert(out.end(), line.begin(), line.end());
    std::vector<std::string> back(out.rbegin(), out.rend());
    std::vector<Minutes> back_hops(hops.rbegin(), hops.rend());
    AddService(out, hops, /*trunk=*/-1);
    AddService(back, back_hops, -1);
  }

  void AddCorridor(const std::string& from, const std::string& to, Minutes run) {
    AddService({from, to}, {run}, corridors_++);
  }

  // Runs trains_per_day trains a day over the stop sequence.
  void AddService(const std::vector<std::string>& stations, const std::vector<Minutes>& hops,
                  int corridor) {
    const Minutes period = kDay / spec_.trains_per_day;
    std::uniform_int_distribution<Minutes> offset_dist(0, period - 1);
    std::uniform_int_distribution<Minutes> jitter(0, 30);
    const Minutes offset = offset_dist(rng_);
    for (int d = 0; d < spec_.days; ++d) {
      for (int k = 0; k < spec_.trains_per_day; ++k) {
        const Minutes start = d * kDay + offset + k * period + jitter(rng_);
        std::vector<Stop> stops;
        Minutes t = start;
        for (std::size_t i = 0; i < stations.size(); ++i) {
          Stop s;
          s.station = stations[i];
          s.yard = std::find(yards_.begin(), yards_.end(), stations[i]) != yards_.end();
          s.arrival = t;
          s.departure = i == 0 ? t : t + 10;
          if (i + 1 < stations.size()) t = s.departure + hops[i];
          stops.push_back(s);
        }
        AddTrain(stops, corridor);
      }
    }
  }

  void AddTrain(const std::vector<Stop>& stops, int corridor) {
    const std::string train = "t" + std::to_string(++train_count_);
    TrainSpec spec{train, {}};
    for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
      spec.segments.push_back(SegmentSpec{train + "s" + std::to_string(i + 1), train,
                                          stops[i].station, stops[i + 1].station,
                                          stops[i].departure, stops[i + 1].arrival,
                                          CapacityVector{1, 1}});
    }
    if (corridor >= 0) trunk_trains_[init_.trains.size()] = corridor;
    int n = 0;
    for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
      for (std::size_t j = i + 1; j < stops.size(); ++j) {
        BlockSpec b;
        b.id = train + "b" + std::to_string(++n);
        for (std::size_t k = i; k < j; ++k) b.segments.push_back(spec.segments[k].id);
        b.origin = stops[i].station;
        b.destination = stops[j].station;
        b.boarding_cutoff =
            stops[i].departure - (stops[i].yard ? kYardBuffer : kSpokeBoardBuffer);
        b.deboarding_ready =
            stops[j].arrival + (stops[j].yard ? kYardBuffer : kSpokeDeboardBuffer);
        init_.blocks.push_back(std::move(b));
      }
    }
    init_.trains.push_back(std::move(spec));
  }

  const ScenarioSpec& spec_;
  std::mt19937_64& rng_;
  InitState init_;
  std::vector<std::string> yards_;
  std::vector<std::string> spokes_;
  std::vector<int> spoke_yard_;
  std::vector<std::vector<int>> spokes_of_;
  std::map<std::size_t, int> trunk_trains_;
  int corridors_ = 0;
  int train_count_ = 0;
};

RequestSpec MakeRequest(const ScenarioSpec& spec, const NetworkBuilder& net, int n,
                        std::mt19937_64& rng) {
  const auto& spokes = net.spokes();
  std::uniform_int_distribution<int> pick(0, static_cast<int>(spokes.size()) - 1);
  std::uniform_real_distribution<double> unit(0, 1);
  const int o = pick(rng);
  const int yo = net.spoke_yard()[o];
  bool inter = spec.yards > 1 && unit(rng) < spec.inter_yard_share;
  if (!inter && net.spokes_of()[yo].size() < 2) inter = spec.yards > 1;
  int d = o;
  if (inter) {
    while (net.spoke_yard()[d] == yo) d = pick(rng);
  } else {
    const auto& local = net.spokes_of()[yo];
    std::uniform_int_distribution<std::size_t> lp(0, local.size() - 1);
    while (d == o && local.size() > 1) d = local[lp(rng)];
  }
  RequestSpec r;
  r.id = Numbered('r', n, 6);
  r.origin = spokes[o];
  r.destination = spokes[d];
  std::uniform_int_distribution<Minutes> pickup(0, (spec.days - 1) * kDay - 1);
  std::uniform_int_distribution<Minutes> window(
      static_cast<Minutes>(std::lround(spec.window_min_hours * 60)),
      static_cast<Minutes>(std::lround(spec.window_max_hours * 60)));
  r.pickup_earliest = pickup(rng);
  r.delivery_latest = r.pickup_earliest + window(rng);
  r.demand = {std::uniform_int_distribution<std::int64_t>(spec.weight_min, spec.weight_max)(rng),
              std::uniform_int_distribution<std::int64_t>(spec.length_min, spec.length_max)(rng)};
  r.attributes["customer"] = Numbered('C', std::uniform_int_distribution<int>(1, 20)(rng), 2);
  static const char* const kNhm[] = {"1101", "2710", "4403", "7208", "8703"};
  r.attributes["nhm-code"] = kNhm[std::uniform_int_distribution<int>(0, 4)(rng)];
  r.product = "standard";
  return r;
}

// Sets trunk capacities from the isolated best chains and feeder
// capacities out of reach. Returns the routable request count.
std::int64_t SizeCapacities(const ScenarioSpec& spec, NetworkBuilder& net,
                            const std::vector<RequestSpec>& requests, ScenarioSummary* summary) {
  InitState& init = net.init();
  CapacityVector total_demand{0, 0};
  for (const auto& r : requests) total_demand += r.demand;
  const CapacityVector roomy{std::max<std::int64_t>(total_demand.weight, spec.weight_max) + 1,
                             std::max<std::int64_t>(total_demand.length, spec.length_max) + 1};
  for (auto& t : init.trains) {
    for (auto& s : t.segments) s.capacity = roomy;
  }
  NetworkState state;
  for (const Station& st : init.stations) state.UpsertStation(st);
  for (const TrainSpec& t : init.trains) state.UpsertTrain(t.id, t.segments);
  for (const BlockSpec& b : init.blocks) state.UpsertBlock(b);

  std::vector<CapacityVector> corridor_load(net.corridors(), CapacityVector{0, 0});
  std::vector<int> corridor_trains(net.corridors(), 0);
  std::map<std::string, int> trunk_segment;
  for (const auto& [t, c] : net.trunk_trains()) {
    ++corridor_trains[c];
    for (const auto& s : init.trains[t].segments) trunk_segment[s.id] = c;
  }
  std::int64_t routable = 0;
  SearchOptions o;
  o.capacity = CapacityMode::kIgnore;
  for (const RequestSpec& spec_r : requests) {
    const Request req = state.ResolveRequest(spec_r);
    const SearchOutcome found = FindBestChain(state, req, o);
    if (found.chains.empty()) continue;
    ++routable;
    for (BlockIndex b : found.chains.front().blocks) {
      for (SegmentIndex s : state.block(b).segments) {
        const auto it = trunk_segment.find(state.segment(s).id);
        if (it == trunk_segment.end()) continue;
        corridor_load[it->second] += req.demand;
        summary->bottleneck_demand += req.demand.weight;
      }
    }
  }
  auto per_train = [&](std::int64_t load, int trains, std::int64_t floor) {
    const double cap = std::ceil(static_cast<double>(load) / spec.tightness / trains);
    return std::max(static_cast<std::int64_t>(cap), floor);
  };
  for (const auto& [t, c] : net.trunk_trains()) {
    const CapacityVector cap{
        per_train(corridor_load[c].weight, corridor_trains[c], spec.weight_max),
        per_train(corridor_load[c].length, corridor_trains[c], spec.length_max)};
    for (auto& s : init.trains[t].segments) {
      s.capacity = cap;
      summary->bottleneck_capacity += cap.weight;
      ++summary->trunk_segments;
    }
  }
  return routable;
}

class MixGenerator {
 public:
  MixGenerator(const ScenarioSpec& spec, const InitState& init, std::mt19937_64& rng)
      : spec_(spec), rng_(rng) {
    for (const auto& t : init.trains) {
      for (const auto& s : t.segments) segments_.push_back(s);
    }
    for (const auto& b : init.blocks) blocks_.push_back(b);
  }

  void Booked(const RequestSpec& r) {
    active_.push_back(r);
  }

  // Appends one non-booking message (or a deferred batch) at instant `at`.
  void Emit(Minutes at, double u, std::vector<StreamRecord>* out) {
    const double total = spec_.mix.update_share + spec_.mix.cancel_share + spec_.mix.network_share;
    const double x = u * total;
    if (x < spec_.mix.update_share && !active_.empty()) {
      RequestSpec& r = active_[Index(active_.size())];
      const Minutes cut = std::uniform_int_distribution<Minutes>(0, 6 * 60)(rng_);
      r.delivery_latest = std::max(r.pickup_earliest + 60, r.delivery_latest - cut);
      out->push_back({at, Message{UpdateRequest{r, true}}});
      return;
    }
    if (x < spec_.mix.update_share + spec_.mix.cancel_share && !active_.empty()) {
      const std::size_t i = Index(active_.size());
      out->push_back({at, Message{CancelRequest{active_[i].id}}});
      active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(i));
      return;
    }
    if (std::uniform_real_distribution<double>(0, 1)(rng_) < spec_.mix.defer_batch_chance) {
      const int n =
          std::uniform_int_distribution<int>(2, std::max(2, spec_.mix.defer_batch_max))(rng_);
      for (int i = 0; i < n; ++i) out->push_back({at, Network(true)});
      out->push_back({at, Message{TriggerCompute{}}});
      return;
    }
    out->push_back({at, Network(false)});
  }

 private:
  std::size_t Index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  Message Network(bool defer) {
    const double u = std::uniform_real_distribution<double>(0, 1)(rng_);
    if (u < 0.5) {
      SegmentSpec s = segments_[Index(segments_.size())];
      const double f = std::uniform_real_distribution<double>(0.6, 1.2)(rng_);
      s.capacity = {static_cast<std::int64_t>(std::llround(s.capacity.weight * f)),
                    static_cast<std::int64_t>(std::llround(s.capacity.length * f))};
      return Message{s, defer};
    }
    if (u < 0.65 || (u < 0.8 && deleted_.empty())) {
      const std::size_t i = Index(blocks_.size());
      if (deleted_.insert(i).second) {
        BlockUpdate del;
        del.block.id = blocks_[i].id;
        del.deleted = true;
        return Message{del, defer};
      }
      return Message{BlockUpdate{blocks_[i], false}, defer};
    }
    if (u < 0.8) {
      auto it = deleted_.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(Index(deleted_.size())));
      const std::size_t i = *it;
      deleted_.erase(it);
      return Message{BlockUpdate{blocks_[i], false}, defer};
    }
    const std::size_t i = Index(blocks_.size());
    if (u < 0.9) {
      const std::int64_t w =
          std::uniform_int_distribution<int>(0, 1)(rng_) == 0 ? 0 : spec_.weight_min;
      return Message{ReservationUpdate{blocks_[i].id, {w, w == 0 ? 0 : spec_.length_min}}, defer};
    }
    RestrictionUpdate r{blocks_[i].id, {}};
    if (std::uniform_int_distribution<int>(0, 1)(rng_) == 0) {
      r.restrictions.push_back(
          Restriction{RestrictionAttribute::kCustomer, RestrictionMode::kForbid,
                      {Numbered('C', std::uniform_int_distribution<int>(1, 20)(rng_), 2)}});
    }
    return Message{r, defer};
  }

  const ScenarioSpec& spec_;
  std::mt19937_64& rng_;
  std::vector<SegmentSpec> segments_;
  std::vector<BlockSpec> blocks_;
  std::set<std::size_t> deleted_;
  std::vector<RequestSpec> active_;
};

}  // namespace

void ScenarioSpec::Validate() const {
  Require(yards >= 1, "yards must be at least 1");
  Require(stations > yards, "stations must exceed yards");
  Require(spokes_per_line >= 1, "spokes_per_line must be at least 1");
  Require(days >= 2 && days <= 60, "days must be in [2, 60]");
  Require(trains_per_day >= 1 && trains_per_day <= 24, "trains_per_day must be in [1, 24]");
  Require(tightness > 0 && tightness <= 1, "tightness must be in (0, 1]");
  Require(requests >= 0, "requests must be non-negative");
  Require(inter_yard_share >= 0 && inter_yard_share <= 1, "inter_yard_share must be in [0, 1]");
  Require(window_min_hours > 0 && window_min_hours <= window_max_hours,
          "need 0 < window_min_hours <= window_max_hours");
  Require(weight_min > 0 && weight_min <= weight_max, "need 0 < weight_min <= weight_max");
  Require(length_min > 0 && length_min <= length_max, "need 0 < length_min <= length_max");
  const auto& l = lead_time;
  Require(l.short_share >= 0 && l.contingent_share >= 0 &&
              l.short_share + l.contingent_share <= 1,
          "lead-time shares must be non-negative and sum to at most 1");
  Require(l.short_max_hours > 0, "short_max_hours must be positive");
  Require(l.long_max_days * 24 > l.short_max_hours, "long_max_days must exceed short_max_hours");
  Require(l.contingent_sd_days > 0, "contingent_sd_days must be positive");
  Require(l.contingent_mean_days * 24 >= l.short_max_hours &&
              l.contingent_mean_days <= l.long_max_days,
          "contingent_mean_days must lie inside the long range");
  const auto& m = mix;
  Require(m.update_share >= 0 && m.cancel_share >= 0 && m.network_share >= 0 &&
              m.update_share + m.cancel_share + m.network_share < 1,
          "mix shares must be non-negative and sum below 1");
  Require(m.defer_batch_chance >= 0 && m.defer_batch_chance <= 1,
          "defer_batch_chance must be in [0, 1]");
  Require(m.defer_batch_max >= 2, "defer_batch_max must be at least 2");
  Require(m.burst_size >= 0 && m.burst_minutes > 0 && m.burst_interval_minutes >= m.burst_minutes,
          "need burst_size >= 0 and 0 < burst_minutes <= burst_interval_minutes");
  Require(m.max_messages >= 0, "max_messages must be non-negative");
}

ScenarioSpec ScenarioSpecFromJson(const json& j) {
  ScenarioSpec s;
  try {
    CheckKeys(j,
              {"stations", "yards", "spokes_per_line", "days", "trains_per_day", "tightness",
               "requests", "inter_yard_share", "window_min_hours", "window_max_hours",
               "weight_min", "weight_max", "length_min", "length_max", "lead_time", "mix",
               "seed"},
              "spec");
    Read(j, "stations", &s.stations);
    Read(j, "yards", &s.yards);
    Read(j, "spokes_per_line", &s.spokes_per_line);
    Read(j, "days", &s.days);
    Read(j, "trains_per_day", &s.trains_per_day);
    Read(j, "tightness", &s.tightness);
    Read(j, "requests", &s.requests);
    Read(j, "inter_yard_share", &s.inter_yard_share);
    Read(j, "window_min_hours", &s.window_min_hours);
    Read(j, "window_max_hours", &s.window_max_hours);
    Read(j, "weight_min", &s.weight_min);
    Read(j, "weight_max", &s.weight_max);
    Read(j, "length_min", &s.length_min);
    Read(j, "length_max", &s.length_max);
    Read(j, "seed", &s.seed);
    if (j.contains("lead_time")) {
      const json& l = j.at("lead_time");
      CheckKeys(l,
                {"short_share", "short_max_hours", "contingent_share", "contingent_mean_days",
                 "contingent_sd_days", "long_max_days"},
                "lead_time");
      Read(l, "short_share", &s.lead_time.short_share);
      Read(l, "short_max_hours", &s.lead_time.short_max_hours);
      Read(l, "contingent_share", &s.lead_time.contingent_share);
      Read(l, "contingent_mean_days", &s.lead_time.contingent_mean_days);
      Read(l, "contingent_sd_days", &s.lead_time.contingent_sd_days);
      Read(l, "long_max_days", &s.lead_time.long_max_days);
    }
    if (j.contains("mix")) {
      const json& m = j.at("mix");
      CheckKeys(m,
                {"update_share", "cancel_share", "network_share", "defer_batch_chance",
                 "defer_batch_max", "burst_size", "burst_minutes", "burst_interval_minutes",
                 "max_messages"},
                "mix");
      Read(m, "update_share", &s.mix.update_share);
      Read(m, "cancel_share", &s.mix.cancel_share);
      Read(m, "network_share", &s.mix.network_share);
      Read(m, "defer_batch_chance", &s.mix.defer_batch_chance);
      Read(m, "defer_batch_max", &s.mix.defer_batch_max);
      Read(m, "burst_size", &s.mix.burst_size);
      Read(m, "burst_minutes", &s.mix.burst_minutes);
      Read(m, "burst_interval_minutes", &s.mix.burst_interval_minutes);
      Read(m, "max_messages", &s.mix.max_messages);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("scenario: ") + e.what());
  }
  s.Validate();
  return s;
}

json ScenarioSpecToJson(const ScenarioSpec& s) {
  const auto& l = s.lead_time;
  const auto& m = s.mix;
  return {{"stations", s.stations},
          {"yards", s.yards},
          {"spokes_per_line", s.spokes_per_line},
          {"days", s.days},
          {"trains_per_day", s.trains_per_day},
          {"tightness", s.tightness},
          {"requests", s.requests},
          {"inter_yard_share", s.inter_yard_share},
          {"window_min_hours", s.window_min_hours},
          {"window_max_hours", s.window_max_hours},
          {"weight_min", s.weight_min},
          {"weight_max", s.weight_max},
          {"length_min", s.length_min},
          {"length_max", s.length_max},
          {"lead_time",
           {{"short_share", l.short_share},
            {"short_max_hours", l.short_max_hours},
            {"contingent_share", l.contingent_share},
            {"contingent_mean_days", l.contingent_mean_days},
            {"contingent_sd_days", l.contingent_sd_days},
            {"long_max_days", l.long_max_days}}},
          {"mix",
           {{"update_share", m.update_share},
            {"cancel_share", m.cancel_share},
            {"network_share", m.network_share},
            {"defer_batch_chance", m.defer_batch_chance},
            {"defer_batch_max", m.defer_batch_max},
            {"burst_size", m.burst_size},
            {"burst_minutes", m.burst_minutes},
            {"burst_interval_minutes", m.burst_interval_minutes},
            {"max_messages", m.max_messages}}},
          {"seed", s.seed}};
}

json RecordToJson(const StreamRecord& r) {
  json j = MessageToJson(r.message);
  j["at"] = FormatInstant(r.at);
  return j;
}

StreamRecord RecordFromJson(const json& j) {
  StreamRecord r;
  r.message = MessageFromJson(j);
  if (j.contains("at")) {
    if (!j.at("at").is_string()) throw InvalidInput("record: 'at' must be a string");
    r.at = ParseInstant(j.at("at").get<std::string>());
  }
  return r;
}

json SummaryToJson(const ScenarioSummary& s) {
  return {{"segments", s.segments},
          {"blocks", s.blocks},
          {"trunk_segments", s.trunk_segments},
          {"bottleneck_demand", s.bottleneck_demand},
          {"bottleneck_capacity", s.bottleneck_capacity},
          {"routable_requests", s.routable_requests},
          {"bookings", s.bookings},
          {"messages", s.messages}};
}

Minutes SampleLeadTime(const LeadTimeMixture& mix, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0, 1);
  const double short_max = mix.short_max_hours * 60;
  const double long_max = mix.long_max_days * kDay;
  const double u = unit(rng);
  double minutes;
  if (u < mix.short_share) {
    minutes = unit(rng) * short_max;
  } else if (u < mix.short_share + mix.contingent_share) {
    std::normal_distribution<double> normal(mix.contingent_mean_days * kDay,
                                            mix.contingent_sd_days * kDay);
    do {
      minutes = normal(rng);
    } while (minutes < short_max || minutes > long_max);
  } else {
    minutes = short_max + unit(rng) * (long_max - short_max);
  }
  return static_cast<Minutes>(std::floor(minutes));
}

Scenario Generate(const ScenarioSpec& spec) {
  spec.Validate();
  Scenario out;
  out.spec = spec;
  std::mt19937_64 rng(spec.seed);
  NetworkBuilder net(spec, rng);
  net.Build();

  std::vector<RequestSpec> requests;
  std::vector<Minutes> booked_at;
  for (int i = 0; i < spec.requests; ++i) {
    requests.push_back(MakeRequest(spec, net, i + 1, rng));
    booked_at.push_back(requests.back().pickup_earliest - SampleLeadTime(spec.lead_time, rng));
  }
  out.summary.routable_requests = SizeCapacities(spec, net, requests, &out.summary);
  for (const auto& t : net.init().trains) out.summary.segments += t.segments.size();
  out.summary.blocks = static_cast<std::int64_t>(net.init().blocks.size());

  std::vector<std::size_t> order(requests.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return booked_at[a] < booked_at[b]; });
  const Minutes start = order.empty() ? 0 : booked_at[order.front()] - 1;
  out.stream.push_back({start, Message{net.init()}});

  MixGenerator mix(spec, net.init(), rng);
  const double extra = spec.mix.update_share + spec.mix.cancel_share + spec.mix.network_share;
  std::uniform_real_distribution<double> unit(0, 1);
  Minutes now = start;
  for (std::size_t k = 0; k < order.size();) {
    const double u = unit(rng);
    if (spec.mix.enabled() && u < extra && k > 0) {
      mix.Emit(now, u / extra, &out.stream);
      continue;
    }
    const RequestSpec& r = requests[order[k]];
    now = booked_at[order[k]];
    out.stream.push_back({now, Message{BookRequest{r, true}}});
    mix.Booked(r);
    ++k;
  }
  if (spec.mix.max_messages > 0 &&
      out.stream.size() > static_cast<std::size_t>(spec.mix.max_messages)) {
    out.stream.resize(spec.mix.max_messages);
  }
  if (spec.mix.burst_size > 0) {
    for (std::size_t i = 1; i < out.stream.size(); ++i) {
      const auto n = static_cast<Minutes>(i - 1);
      const Minutes burst = n / spec.mix.burst_size;
      const Minutes pos = n % spec.mix.burst_size;
      out.stream[i].at = start + burst * spec.mix.burst_interval_minutes +
                         pos * spec.mix.burst_minutes / spec.mix.burst_size;
    }
  }
  for (const auto& r : out.stream) {
    if (r.message.kind() == MessageKind::kBookRequest) ++out.summary.bookings;
  }
  out.summary.messages = static_cast<std::int64_t>(out.stream.size());
  return out;
}

Scenario Adversarial() {
  InitState init;
  for (const char* id : {"A", "B"})
    init.stations.push_back(Station{id, StationKind::kOperational, "", ""});
  const CapacityVector cap{400, 1000};
  init.trains.push_back(TrainSpec{"t1", {SegmentSpec{"t1s1", "t1", "A", "B", 100, 200, cap}}});
  init.trains.push_back(TrainSpec{"t2", {SegmentSpec{"t2s1", "t2", "A", "B", 300, 420, cap}}});
  for (const auto& [id, seg, cutoff, ready] :
       {std::tuple{"b1", "t1s1", 90, 210}, std::tuple{"b2", "t2s1", 290, 430}}) {
    BlockSpec b;
    b.id = id;
    b.segments = {seg};
    b.origin = "A";
    b.destination = "B";
    b.boarding_cutoff = cutoff;
    b.deboarding_ready = ready;
    init.blocks.push_back(std::move(b));
  }
  auto request = [](const char* id, std::int64_t weight, Minutes latest) {
    RequestSpec r;
    r.id = id;
    r.origin = "A";
    r.destination = "B";
    r.pickup_earliest = 0;
    r.delivery_latest = latest;
    r.demand = {weight, 10};
    r.product = "standard";
    return r;
  };
  Scenario out;
  out.spec.requests = 3;
  out.stream.push_back({-4, Message{init}});
  out.stream.push_back({-3, Message{BookRequest{request("large", 300, 1000), true}}});
  out.stream.push_back({-2, Message{BookRequest{request("small1", 200, 250), true}}});
  out.stream.push_back({-1, Message{BookRequest{request("small2", 200, 250), true}}});
  out.summary.segments = 2;
  out.summary.blocks = 2;
  out.summary.routable_requests = 3;
  out.summary.bookings = 3;
  out.summary.messages = 4;
  return out;
}

void WriteScenario(const Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream stream(dir / "stream.ndjson", std::ios::trunc);
  if (!stream) throw std::runtime_error("cannot write " + (dir / "stream.ndjson").string());
  for (const auto& r : scenario.stream) stream << RecordToJson(r).dump() << '\n';
  std::ofstream meta(dir / "scenario.json", std::ios::trunc);
  meta << json{{"spec", ScenarioSpecToJson(scenario.spec)},
               {"summary", SummaryToJson(scenario.summary)}}
              .dump(2)
       << '\n';
  if (!stream || !meta) throw std::runtime_error("write failed in " + dir.string());
}

std::vector<StreamRecord> ReadStream(const std::filesystem::path& path) {
  const auto file =
      std::filesystem::is_directory(path) ? path / "stream.ndjson" : path;
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<StreamRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(RecordFromJson(json::parse(line)));
    } catch (const std::exception& e) {
      throw InvalidInput(file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace chainplan::sim
