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

// Deterministic single-threaded replay of a message stream.
//
// greedy   each booking takes its best chain that fits, nobody moves
// online   the staged assignment, exactly as the service runs it
// offline  bookings are held, then one model over every request and all of
//          its chains decides who travels

#ifndef CHAINPLAN_TOOLS_REPLAY_H_
#define CHAINPLAN_TOOLS_REPLAY_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chainplan/engine.h"
#include "scenario.h"

namespace chainplan::sim {

enum class Strategy { kGreedy, kOnline, kOffline };
std::string_view StrategyName(Strategy s);
std::optional<Strategy> ParseStrategy(std::string_view name);

struct ReplayOptions {
  EngineConfig engine;
  // Offline enumeration and solve limits.
  SearchLimits offline_limits{.time_budget_seconds = 30, .max_blocks = 7,
                              .max_frontier = 10'000'000, .max_chains = 1000};
  SolveOptions offline_solve{.time_budget_seconds = 600, .max_nodes = 5'000'000};
  // Receives the offline model in LP format before it is solved.
  std::ostream* lp_out = nullptr;
  // Called after every message with its position in the stream.
  std::function<void(std::size_t, const Engine&)> observer;
};

struct RunReport {
  Strategy strategy = Strategy::kOnline;
  std::int64_t messages = 0;
  std::int64_t rejected_messages = 0;
  std::int64_t requests = 0;
  std::int64_t routed = 0;
  std::int64_t partial = 0;
  std::int64_t unrouted = 0;
  // Assign calls by outcome (offline: one entry per request).
  std::array<std::int64_t, kNumOutcomeKinds> outcomes{};
  std::array<std::int64_t, kNumStages> resolved_at{};
  std::array<std::int64_t, kNumStages> finished_at{};
  std::array<std::int64_t, kNumStages> stage_searches{};
  std::array<double, kNumStages> stage_seconds{};
  std::int64_t assignments = 0;
  FunctionTimes times;
  double seconds = 0;
  // Offline only.
  bool truncated = false;
  bool proven_optimal = true;
  std::int64_t model_variables = 0;
  std::int64_t model_constraints = 0;
  SolveStats solve;
  // Upper bound on how many requests the offline model can route.
  std::int64_t routed_bound = 0;
  // Hash of the exported final state.
  std::string state_digest;

  double routed_share() const {
    return requests == 0 ? 0.0 : static_cast<double>(routed) / requests;
  }
  // Share of assign calls that ended before the enumeration stages.
  double bfs_share() const;
};

RunReport Replay(const std::vector<StreamRecord>& stream, Strategy strategy,
                 const ReplayOptions& options = {});

// One row per report.
void WriteCsv(std::ostream& out, const std::vector<RunReport>& reports);
void WriteTable(std::ostream& out, const std::vector<RunReport>& reports);
// The table plus routed-count deltas between strategies.
void WriteComparison(std::ostream& out, const std::vector<RunReport>& reports);

std::string StateDigest(const NetworkState& state);

}  // namespace chainplan::sim

#endif  // CHAINPLAN_TOOLS_REPLAY_H_
