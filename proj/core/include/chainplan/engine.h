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

// The single-writer engine behind the service and the replay tool.
//
// Apply() performs one message atomically: a rejected message throws and
// leaves the state untouched. Network changes mark the requests whose chains
// touch a changed object; marked requests are revalidated by RunWave(),
// either right away (the message reports wave_due) or after a
// trigger-compute when the message was deferred.

#ifndef CHAINPLAN_ENGINE_H_
#define CHAINPLAN_ENGINE_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainplan/chain_cache.h"
#include "chainplan/chain_search.h"
#include "chainplan/messages.h"
#include "chainplan/network_state.h"
#include "chainplan/online_assignment.h"

namespace chainplan {

// Maximal delivery window per product, used when a booking has no deadline.
class ProductTable {
 public:
  void Set(const std::string& product, Minutes max_window);
  std::optional<Minutes> Window(const std::string& product) const;
  std::size_t size() const { return windows_.size(); }

  // {"products": [{"name": "express", "max_window_hours": 29}, ...]}
  static ProductTable FromJson(const nlohmann::json& j);
  static ProductTable Load(const std::string& path);

 private:
  std::map<std::string, Minutes> windows_;
};

// How a booking obtains its chain. kGreedy takes the best chain that fits
// and never moves other requests; kHold stores the request unassigned.
enum class AssignPolicy { kStaged, kGreedy, kHold };

struct EngineConfig {
  AssignConfig assign;
  AssignPolicy policy = AssignPolicy::kStaged;
  ProductTable products;
  bool use_cache = true;
};

struct BookingResult {
  RequestIndex request = -1;
  OutcomeKind outcome = OutcomeKind::kNotRoutable;
  TransportChain chain;
  std::optional<AssignmentStage> stage;
  std::optional<Minutes> promised_arrival;
  // False when no assignment ran: manual requests wait for a manual chain,
  // and the hold policy leaves bookings for a later batch.
  bool attempted = true;
};

struct RevalidationRecord {
  RequestIndex request = -1;
  TransportChain before;
  TransportChain after;
  RequestStatus status = RequestStatus::kUnassigned;
  // Position of the first infeasible block; the chain length if none.
  std::size_t cut = 0;
  bool searched = false;
};

struct WaveResult {
  std::vector<RevalidationRecord> records;
  // Requests left without blocks and given a fresh assignment.
  std::vector<BookingResult> reassigned;
};

struct MessageEffects {
  MessageKind kind = MessageKind::kTriggerCompute;
  // Ids of the objects the message touched.
  std::vector<std::string> changed;
  // Requests marked for revalidation by this message.
  std::vector<RequestIndex> affected;
  bool deferred = false;
  bool wave_due = false;
  std::optional<BookingResult> booking;
  std::optional<RevalidationRecord> revalidation;
  // Set by Process() when the message ran a wave.
  std::optional<WaveResult> wave;
};

struct EngineStats {
  std::array<std::int64_t, kNumMessageKinds> messages{};
  std::array<double, kNumMessageKinds> message_seconds{};
  std::int64_t rejected = 0;
  std::int64_t dryrun_searches = 0;
  std::int64_t dryrun_validations = 0;
  double dryrun_seconds = 0;

  // Assign calls and what they produced.
  std::int64_t assignments = 0;
  std::array<std::int64_t, kNumOutcomeKinds> outcomes{};
  std::array<double, kNumOutcomeKinds> outcome_seconds{};
  // Routed requests by the stage that produced their chain.
  std::array<std::int64_t, kNumStages> resolved_at{};
  // Assign calls by the deepest stage that did any work.
  std::array<std::int64_t, kNumStages> finished_at{};
  std::array<std::int64_t, kNumStages> stage_searches{};
  std::array<double, kNumStages> stage_seconds{};
  std::array<std::int64_t, kNumStages> stage_optimizations{};
  FunctionTimes times;
  std::int64_t cache_hits = 0;

  std::int64_t waves = 0;
  double wave_seconds = 0;
  std::int64_t revalidated = 0;
  std::int64_t unchanged = 0;
  std::int64_t recompleted = 0;
  std::int64_t partial = 0;
  std::int64_t reassigned = 0;
  std::int64_t revalidation_searches = 0;
};

nlohmann::json StatsToJson(const EngineStats& stats);

class Engine {
 public:
  explicit Engine(EngineConfig config = {});

  // Throws LookupError or InvalidInput on rejection; the state is unchanged.
  MessageEffects Apply(const Message& message);
  // Revalidates every released request and retries partial chains,
  // earliest promise first.
  WaveResult RunWave();
  // Apply, then RunWave if due. Used for sequential replay.
  MessageEffects Process(const Message& message);

  // Pure with respect to the state; only the counters move.
  SearchOutcome DryRunSearch(const RequestSpec& spec, bool has_deadline,
                             const SearchOptions& options);
  SearchOutcome DryRunSearch(RequestIndex request, const SearchOptions& options);
  ValidationResult DryRunValidate(const Request& request, const ChainSpec& chain,
                                  bool required);

  // Single-request revalidation, also used for update-request.
  RevalidationRecord Revalidate(RequestIndex r);

  // Restores the ledger after a failed task.
  void RecoverLedger();

  const NetworkState& state() const { return state_; }
  const EngineStats& stats() const { return stats_; }
  const EngineConfig& config() const { return config_; }
  std::size_t pending() const { return pending_.size(); }
  std::size_t parked() const { return parked_.size(); }
  // Deadline derived from the product table when the spec has none.
  RequestSpec CompleteSpec(RequestSpec spec, bool has_deadline) const;
  Request ResolveForDryRun(const RequestSpec& spec, bool has_deadline) const;

 private:
  void Init(const InitState& init);
  BookingResult Book(const RequestSpec& spec);
  BookingResult AssignOne(RequestIndex r);
  // Rejects the request when no chain is found.
  BookingResult AssignOrReject(RequestIndex r);
  void Record(const AssignmentOutcome& outcome);
  void MarkBlock(BlockIndex b, std::set<RequestIndex>* out) const;
  void MarkSegment(SegmentIndex s, std::set<RequestIndex>* out) const;
  TransportChain ResolveChain(const ChainSpec& chain) const;

  EngineConfig config_;
  NetworkState state_;
  ChainCache cache_;
  EngineStats stats_;
  // Marked requests, released for the next wave.
  std::set<RequestIndex> pending_;
  // Marked by deferred messages; released by trigger-compute.
  std::set<RequestIndex> parked_;
  // Requests whose chain a wave emptied and no assignment has replaced.
  std::set<RequestIndex> orphaned_;
};

}  // namespace chainplan

#endif  // CHAINPLAN_ENGINE_H_
