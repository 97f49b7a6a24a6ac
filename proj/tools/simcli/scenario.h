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

// Synthetic hub-and-spoke scenarios.
//
// Yards are fully meshed by trunk trains; each spoke hangs off one yard on a
// feeder line that runs out of the yard and back. Trunk segments are the
// bottleneck: their capacity is the demand routed over them on isolated best
// chains divided by the tightness, spread over the corridor's trains.
// Feeders get enough room never to bind.

#ifndef CHAINPLAN_TOOLS_SCENARIO_H_
#define CHAINPLAN_TOOLS_SCENARIO_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainplan/messages.h"

namespace chainplan::sim {

struct LeadTimeMixture {
  // Uniform on [0, short_max_hours].
  double short_share = 0.55;
  double short_max_hours = 12;
  // Normal around two weeks, resampled into [short_max_hours, long_max_days].
  double contingent_share = 0.2;
  double contingent_mean_days = 14;
  double contingent_sd_days = 1;
  // The rest: uniform on [short_max_hours, long_max_days].
  double long_max_days = 28;
};

// Non-booking traffic mixed into the stream, as shares of all messages.
struct ServiceMix {
  double update_share = 0;
  double cancel_share = 0;
  double network_share = 0;
  // Chance that a network message opens a deferred batch closed by a
  // trigger-compute.
  double defer_batch_chance = 0.2;
  int defer_batch_max = 5;
  // Timestamps: burst_size messages per burst_minutes, one burst per
  // burst_interval_minutes. Zero keeps the booking instants.
  int burst_size = 0;
  int burst_minutes = 5;
  int burst_interval_minutes = 60;
  // Cut the stream (init-state included) to this length; zero keeps all.
  int max_messages = 0;

  bool enabled() const { return update_share + cancel_share + network_share > 0; }
};

struct ScenarioSpec {
  int stations = 20;
  int yards = 2;
  int spokes_per_line = 2;
  int days = 3;
  int trains_per_day = 3;
  double tightness = 0.5;
  int requests = 100;
  // Share of requests whose endpoints hang off different yards.
  double inter_yard_share = 0.8;
  double window_min_hours = 24;
  double window_max_hours = 48;
  std::int64_t weight_min = 300;
  std::int64_t weight_max = 1200;
  std::int64_t length_min = 150;
  std::int64_t length_max = 250;
  LeadTimeMixture lead_time;
  ServiceMix mix;
  std::uint64_t seed = 1;

  int spokes() const { return stations - yards; }
  // Throws InvalidInput on out-of-range parameters.
  void Validate() const;
};

ScenarioSpec ScenarioSpecFromJson(const nlohmann::json& j);
nlohmann::json ScenarioSpecToJson(const ScenarioSpec& spec);

// One stream entry: a wire message and the simulated instant it arrives.
struct StreamRecord {
  Minutes at = 0;
  Message message;
};

nlohmann::json RecordToJson(const StreamRecord& r);
StreamRecord RecordFromJson(const nlohmann::json& j);

struct ScenarioSummary {
  std::int64_t segments = 0;
  std::int64_t blocks = 0;
  std::int64_t trunk_segments = 0;
  // Weight over trunk segments: demand counts once per trunk segment on the
  // request's isolated best chain.
  std::int64_t bottleneck_demand = 0;
  std::int64_t bottleneck_capacity = 0;
  std::int64_t routable_requests = 0;
  std::int64_t bookings = 0;
  std::int64_t messages = 0;
};

nlohmann::json SummaryToJson(const ScenarioSummary& s);

struct Scenario {
  ScenarioSpec spec;
  // The first record carries the init-state message.
  std::vector<StreamRecord> stream;
  ScenarioSummary summary;
};

// Deterministic in the spec, seed included.
Scenario Generate(const ScenarioSpec& spec);

// ADV1: one 400 t train and a later parallel one. The 300 t booking comes
// first and prefers the early train; the two 200 t bookings after it can
// only make the early train. Greedy routes one request, the optimum three.
Scenario Adversarial();

// Samples one lead time in minutes.
Minutes SampleLeadTime(const LeadTimeMixture& mix, std::mt19937_64& rng);

// Directory layout: stream.ndjson plus scenario.json.
void WriteScenario(const Scenario& scenario, const std::filesystem::path& dir);
// Reads dir/stream.ndjson, or the file itself when `path` is a file.
std::vector<StreamRecord> ReadStream(const std::filesystem::path& path);

}  // namespace chainplan::sim

#endif  // CHAINPLAN_TOOLS_SCENARIO_H_
