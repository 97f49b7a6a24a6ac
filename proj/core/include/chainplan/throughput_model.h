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

// Path-based throughput model: one binary per (request, candidate chain),
// one integer capacity variable per (block, dimension).
//
//   max  sum p_rc x_rc
//   choice       sum_c x_rc <= 1                      r not fixed
//   fixed        sum_c x_rc  = 1                      r fixed
//   cover        cap_b >= u_b + sum_{rc: b in c} d_r x_rc
//   segment      sum_{b in B_s} cap_b <= C_s - O_s
//   reservation  cap_b >= res_b
//
// C_s is the adjusted segment capacity and O_s the space taken on s by
// blocks outside the model.

#ifndef CHAINPLAN_THROUGHPUT_MODEL_H_
#define CHAINPLAN_THROUGHPUT_MODEL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chainplan/network_state.h"
#include "chainplan/types.h"

namespace chainplan {

// Exact objective coefficient W - rank / denominator, kept as a fraction.
struct Price {
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  double value() const { return static_cast<double>(numerator) / denominator; }
};

// denominator = num_requests * max_candidates + 1.
Price PriceCoefficient(int priority, int rank, std::int64_t num_requests,
                       std::int64_t max_candidates);

// Candidate chains of one request, in tie-break order (rank = position).
struct CandidateSet {
  RequestIndex request = -1;
  bool fixed = false;
  std::vector<TransportChain> chains;
};

struct ModelRequest {
  RequestIndex request = -1;
  std::string id;
  int priority = 1;
  bool fixed = false;
  CapacityVector demand;
  std::vector<TransportChain> candidates;
  // Model block positions of each candidate, one entry per occurrence.
  std::vector<std::vector<int>> candidate_blocks;
  // Rank of the request's current chain among the candidates, if held.
  int current = -1;
};

struct ModelBlock {
  BlockIndex block = -1;
  CapacityVector reservation;
  // Load that the model cannot move: manual utilization plus requests
  // outside the model.
  CapacityVector fixed_load;
  std::vector<int> segments;
};

struct ModelSegment {
  SegmentIndex segment = -1;
  CapacityVector adjusted;
  // Sum of max(reservation, load) over blocks of the segment outside B.
  CapacityVector outside;
  std::vector<int> blocks;
};

struct FormalSize {
  std::int64_t binaries = 0;
  std::int64_t integers = 0;
  // Rows per family: choice, fixed, cover, segment, reservation.
  std::array<std::int64_t, 5> family{};
  std::int64_t variables() const { return binaries + integers; }
  std::int64_t constraints() const {
    return family[0] + family[1] + family[2] + family[3] + family[4];
  }
};

class OptModel {
 public:
  std::vector<ModelRequest> requests;
  std::vector<ModelBlock> blocks;
  std::vector<ModelSegment> segments;
  std::int64_t denominator = 1;

  FormalSize size() const;
  // W * denominator - rank.
  std::int64_t ScaledPrice(int r, int rank) const;
  CapacityVector SegmentBound(int s) const { return segments[s].adjusted - segments[s].outside; }
  // Plain-text LP-format dump with a scaled integer objective.
  void WriteLp(std::ostream& out, const NetworkState& state) const;
};

// Every request not in the model that holds capacity is untouchable: its
// usage goes into the blocks' fixed load. A fixed request whose current
// chain is missing from its candidates gets it appended.
OptModel BuildModel(const NetworkState& state, std::span<const CandidateSet> candidates);

struct SolveOptions {
  double time_budget_seconds = 5.0;
  std::int64_t max_nodes = 1'000'000;
};

struct SolveStats {
  std::int64_t nodes = 0;
  std::int64_t lp_iterations = 0;
  int components = 0;
  int lp_rows = 0;
  int lp_columns = 0;
  // Cuts added at the roots.
  int cuts = 0;
  // Chains left out because a better chain of the same request uses no more
  // capacity anywhere.
  int dominated_columns = 0;
  double seconds = 0;
};

struct Assignment {
  // Chosen rank per model request, -1 when unrouted.
  std::vector<int> choice;
  std::int64_t scaled_objective = 0;
  // Upper bound on the best scaled objective; equals scaled_objective when
  // proven optimal.
  double scaled_bound = 0;
  bool proven_optimal = false;
  // False only when no feasible selection was found at all.
  bool feasible = true;
  // cap_b per model block.
  std::vector<CapacityVector> block_capacity;
  SolveStats stats;

  double objective(const OptModel& model) const {
    return static_cast<double>(scaled_objective) / model.denominator;
  }
  int routed_count() const;
  std::vector<std::pair<RequestIndex, TransportChain>> Routed(const OptModel& model) const;
  std::vector<RequestIndex> Unrouted(const OptModel& model) const;
};

Assignment Solve(const OptModel& model, const SolveOptions& options = {});

inline constexpr int kBruteForceLimit = 20;

// Exhaustive enumeration; refuses models with more than kBruteForceLimit
// candidates in total.
Assignment BruteForceSolve(const OptModel& model);

// Checks every constraint family on an assignment; returns one message
// per violated row.
std::vector<std::string> VerifyAssignment(const OptModel& model, const Assignment& assignment);

}  // namespace chainplan

#endif  // CHAINPLAN_THROUGHPUT_MODEL_H_
