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

#include "chainplan/online_assignment.h"

#include <algorithm>
#include <chrono>
#include <exception>
#include <set>
#include <unordered_set>
#include <utility>

#include "chainplan/chain_rules.h"

namespace chainplan {
namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool Contains(std::span<const RequestIndex> list, RequestIndex r) {
  return std::find(list.begin(), list.end(), r) != list.end();
}

class Assigner {
 public:
  Assigner(NetworkState& state, std::span<const RequestIndex> requests,
           const AssignConfig& config)
      : state_(state),
        input_(requests.begin(), requests.end()),
        config_(config),
        start_(Clock::now()),
        deadline_(start_ + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(config.time_budget_seconds))) {
    std::set<RequestIndex> seen;
    for (RequestIndex r : input_) {
      if (r < 0 || static_cast<std::size_t>(r) >= state_.num_requests()) {
        throw LookupError("unknown request index " + std::to_string(r));
      }
      const Request& req = state_.request(r);
      if (!req.alive) throw InvalidInput("request " + req.id + " is cancelled");
      if (req.manual || req.status == RequestStatus::kManual) {
        throw InvalidInput("request " + req.id + " is manual");
      }
      if (!seen.insert(r).second) throw InvalidInput("request " + req.id + " listed twice");
    }
  }

  AssignmentOutcome Run() {
    config_.limits.Validate();
    if (!Stage1() && !Stage2And3()) Stage4();
    return Finish();
  }

  AssignmentOutcome RunGreedy() {
    for (RequestIndex r : input_) {
      out_.last_stage = AssignmentStage::kCapacityBfs;
      if (TimeUp()) break;
      auto chain = BestChain(r, CapacityMode::kRespect, AssignmentStage::kCapacityBfs);
      if (chain) {
        state_.SetChain(r, *chain, RequestStatus::kAssigned);
        decided_[r] = {r, OutcomeKind::kRouted, *chain, AssignmentStage::kCapacityBfs};
        continue;
      }
      const bool exists =
          BestChain(r, CapacityMode::kIsolated, AssignmentStage::kCapacityBfs).has_value();
      decided_[r] = {r, exists ? OutcomeKind::kNoCapacity : OutcomeKind::kNotRoutable, {}, {}};
    }
    out_.timed_out = decided_.size() < input_.size();
    for (RequestIndex r : input_) {
      auto it = decided_.find(r);
      out_.results.push_back(it != decided_.end()
                                 ? it->second
                                 : RequestOutcome{r, OutcomeKind::kTimeoutPartial, {}, {}});
    }
    out_.seconds = SecondsSince(start_);
    return std::move(out_);
  }

 private:
  bool TimeUp() const { return Clock::now() >= deadline_; }

  double Remaining() const {
    return std::max(0.0, std::chrono::duration<double>(deadline_ - Clock::now()).count());
  }

  SearchOptions Options(RequestIndex r, CapacityMode mode) const {
    SearchOptions o;
    o.capacity = mode;
    o.limits = config_.limits;
    o.limits.time_budget_seconds = std::min(config_.limits.time_budget_seconds, Remaining());
    o.key_order = config_.key_order;
    if (state_.request(r).HoldsCapacity()) o.excluded.push_back(r);
    return o;
  }

  std::optional<TransportChain> BestChain(RequestIndex r, CapacityMode mode,
                                          AssignmentStage stage) {
    const auto t0 = Clock::now();
    ++out_.stages[static_cast<int>(stage)].searches;
    SearchOutcome found = FindBestChain(state_, state_.request(r), Options(r, mode));
    out_.times.best_chain += SecondsSince(t0);
    if (found.chains.empty()) return std::nullopt;
    return std::move(found.chains.front());
  }

  std::vector<TransportChain> AllChains(RequestIndex r, AssignmentStage stage) {
    const auto t0 = Clock::now();
    ++out_.stages[static_cast<int>(stage)].searches;
    const Request& req = state_.request(r);
    std::vector<TransportChain> chains;
    bool live = true;
    if (config_.cache != nullptr) {
      const CacheKey key = config_.cache->KeyFor(state_, req);
      std::optional<CachedChains> cached = config_.cache->Lookup(key, state_.network_version());
      if (cached) {
        ++out_.cache_hits;
      } else {
        SearchOptions o = Options(r, CapacityMode::kIgnore);
        o.excluded.clear();
        o.pickup_override = key.pickup_bucket;
        SearchOutcome found = EnumerateChains(state_, req, o);
        cached = CachedChains{std::move(found.chains), found.truncated.any()};
        // A run cut short by the clock is not a property of the network.
        if (!found.truncated.time_limit) {
          config_.cache->Store(key, state_.network_version(), *cached);
        }
      }
      ValidationOptions v;
      v.capacity = CapacityMode::kRespect;
      if (req.HoldsCapacity()) v.excluded.push_back(r);
      for (TransportChain& c : cached->chains) {
        if (static_cast<int>(chains.size()) >= config_.limits.max_chains) break;
        if (ValidateChain(state_, req, c, v).ok()) chains.push_back(std::move(c));
      }
      live = chains.empty() && cached->truncated;
    }
    if (live) {
      SearchOutcome found = EnumerateChains(state_, req, Options(r, CapacityMode::kRespect));
      chains = std::move(found.chains);
    }
    out_.times.enumerate += SecondsSince(t0);
    return chains;
  }

  // Adds chains to C_r, keeping tie-break order.
  void Merge(RequestIndex r, std::vector<TransportChain> chains) {
    std::vector<TransportChain>& set = candidates_[r];
    for (TransportChain& c : chains) {
      if (std::find(set.begin(), set.end(), c) == set.end()) set.push_back(std::move(c));
    }
    std::stable_sort(set.begin(), set.end(),
                     [&](const TransportChain& a, const TransportChain& b) {
                       return ChainLess(state_, a, b, config_.key_order);
                     });
  }

  // Returns true on global success.
  bool Optimize(AssignmentStage stage) {
    std::vector<RequestIndex> fixed = neighbors_;
    for (RequestIndex r : active_) {
      if (committed_.contains(r) || state_.request(r).HoldsCapacity()) fixed.push_back(r);
    }
    SolveOptions options = config_.solve;
    options.time_budget_seconds = std::min(options.time_budget_seconds, Remaining());
    ++out_.stages[static_cast<int>(stage)].optimizations;
    TryResult result = TryOptimization(state_, active_, candidates_, fixed, options);
    out_.times.build_model += result.build_seconds;
    out_.times.solve += result.solve_seconds;
    if (!last_ || result.routed.size() >= last_->routed.size()) {
      last_ = std::move(result);
      last_stage_ = stage;
    }
    for (RequestIndex r : last_->routed) committed_.insert(r);
    return last_->success;
  }

  void Timed(AssignmentStage stage, Clock::time_point t0) {
    out_.stages[static_cast<int>(stage)].seconds += SecondsSince(t0);
    out_.last_stage = stage;
  }

  bool Stage1() {
    const auto t0 = Clock::now();
    for (RequestIndex r : input_) {
      if (TimeUp()) {
        Timed(AssignmentStage::kIsolatedBfs, t0);
        out_.timed_out = true;
        return true;
      }
      auto chain = BestChain(r, CapacityMode::kIsolated, AssignmentStage::kIsolatedBfs);
      if (!chain) {
        decided_[r] = {r, OutcomeKind::kNotRoutable, {}, {}};
        continue;
      }
      has_isolated_.insert(r);
      active_.push_back(r);
      Merge(r, {std::move(*chain)});
    }
    const bool done = active_.empty() || Optimize(AssignmentStage::kIsolatedBfs);
    Timed(AssignmentStage::kIsolatedBfs, t0);
    return done || StopOnTime();
  }

  bool StopOnTime() {
    if (!TimeUp()) return false;
    out_.timed_out = true;
    return true;
  }

  bool Stage2And3() {
    auto t0 = Clock::now();
    neighborhood_search_ = true;
    for (RequestIndex r : std::vector<RequestIndex>(last_->unrouted)) {
      if (StopOnTime()) {
        Timed(AssignmentStage::kCapacityBfs, t0);
        return true;
      }
      auto chain = BestChain(r, CapacityMode::kRespect, AssignmentStage::kCapacityBfs);
      if (!chain) {
        neighborhood_search_ = false;
        break;
      }
      Merge(r, {std::move(*chain)});
    }
    if (neighborhood_search_ && Optimize(AssignmentStage::kCapacityBfs)) {
      Timed(AssignmentStage::kCapacityBfs, t0);
      return true;
    }
    Timed(AssignmentStage::kCapacityBfs, t0);
    if (StopOnTime()) return true;

    t0 = Clock::now();
    for (RequestIndex r : active_) {
      if (StopOnTime()) {
        Timed(AssignmentStage::kAllChains, t0);
        return true;
      }
      Merge(r, AllChains(r, AssignmentStage::kAllChains));
    }
    const bool done = neighborhood_search_ && Optimize(AssignmentStage::kAllChains);
    Timed(AssignmentStage::kAllChains, t0);
    return done || StopOnTime();
  }

  bool Stage4() {
    const auto t0 = Clock::now();
    std::vector<TransportChain> frontier;
    for (RequestIndex r : active_) {
      for (const TransportChain& c : candidates_[r]) frontier.push_back(c);
    }
    std::vector<RequestIndex> exclude = active_;
    for (int depth = 0; depth < config_.neighborhood_depth && !frontier.empty(); ++depth) {
      const std::vector<RequestIndex> ring = Neighborhood(state_, frontier, exclude);
      frontier.clear();
      for (RequestIndex n : ring) {
        if (StopOnTime()) {
          Timed(AssignmentStage::kNeighborhood, t0);
          return true;
        }
        std::vector<TransportChain> chains = AllChains(n, AssignmentStage::kNeighborhood);
        candidates_[n].clear();
        Merge(n, std::move(chains));
        for (const TransportChain& c : candidates_[n]) frontier.push_back(c);
        neighbors_.push_back(n);
        exclude.push_back(n);
      }
    }
    out_.neighborhood = neighbors_;
    const bool done = Optimize(AssignmentStage::kNeighborhood);
    Timed(AssignmentStage::kNeighborhood, t0);
    return done;
  }

  AssignmentOutcome Finish() {
    if (last_) {
      const std::unordered_set<RequestIndex> inputs(input_.begin(), input_.end());
      for (const auto& [r, chain] : last_->assignment) {
        const Request& req = state_.request(r);
        const bool unchanged = req.HoldsCapacity() && req.chain == chain;
        if (!unchanged) state_.SetChain(r, chain, RequestStatus::kAssigned);
        if (!inputs.contains(r) && !unchanged) out_.rerouted.emplace_back(r, chain);
      }
      for (RequestIndex r : last_->routed) {
        decided_[r] = {r, OutcomeKind::kRouted, state_.request(r).chain, last_stage_};
      }
    }
    const bool completed = !out_.timed_out;
    for (RequestIndex r : input_) {
      if (decided_.contains(r)) continue;
      if (!completed) {
        decided_[r] = {r, OutcomeKind::kTimeoutPartial, {}, {}};
      } else {
        decided_[r] = {r, has_isolated_.contains(r) ? OutcomeKind::kNoCapacity
                                                    : OutcomeKind::kNotRoutable,
                       {}, {}};
      }
    }
    for (RequestIndex r : input_) out_.results.push_back(decided_[r]);
    out_.seconds = SecondsSince(start_);
    return std::move(out_);
  }

  NetworkState& state_;
  std::vector<RequestIndex> input_;
  AssignConfig config_;
  Clock::time_point start_;
  Clock::time_point deadline_;

  AssignmentOutcome out_;
  std::map<RequestIndex, RequestOutcome> decided_;
  std::vector<RequestIndex> active_;
  std::set<RequestIndex> has_isolated_;
  std::set<RequestIndex> committed_;
  std::vector<RequestIndex> neighbors_;
  std::map<RequestIndex, std::vector<TransportChain>> candidates_;
  std::optional<TryResult> last_;
  AssignmentStage last_stage_ = AssignmentStage::kIsolatedBfs;
  bool neighborhood_search_ = true;
};

}  // namespace

std::string_view StageName(AssignmentStage stage) {
  switch (stage) {
    case AssignmentStage::kIsolatedBfs:
      return "isolated-bfs";
    case AssignmentStage::kCapacityBfs:
      return "capacity-bfs";
    case AssignmentStage::kAllChains:
      return "all-chains";
    case AssignmentStage::kNeighborhood:
      return "neighborhood";
  }
  return "unknown";
}

std::string_view OutcomeName(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::kRouted:
      return "routed";
    case OutcomeKind::kNotRoutable:
      return "not-routable";
    case OutcomeKind::kNoCapacity:
      return "no-capacity";
    case OutcomeKind::kTimeoutPartial:
      return "timeout-partial";
  }
  return "unknown";
}

std::int64_t AssignmentOutcome::search_calls() const {
  std::int64_t n = 0;
  for (const StageCounters& s : stages) n += s.searches;
  return n;
}

const RequestOutcome* AssignmentOutcome::Find(RequestIndex r) const {
  for (const RequestOutcome& o : results) {
    if (o.request == r) return &o;
  }
  return nullptr;
}

std::vector<RequestIndex> Neighborhood(const NetworkState& state,
                                       std::span<const TransportChain> chains,
                                       std::span<const RequestIndex> exclude) {
  std::unordered_set<SegmentIndex> segments;
  for (const TransportChain& c : chains) {
    for (BlockIndex b : c.blocks) {
      for (SegmentIndex s : state.block(b).segments) segments.insert(s);
    }
  }
  std::set<RequestIndex> found;
  std::unordered_set<BlockIndex> seen_blocks;
  for (SegmentIndex s : segments) {
    for (BlockIndex b : state.SegmentBlocks(s)) {
      if (!seen_blocks.insert(b).second) continue;
      for (RequestIndex r : state.BlockRequests(b)) {
        const Request& req = state.request(r);
        if (!req.HoldsCapacity() || req.manual || req.status == RequestStatus::kManual) continue;
        if (Contains(exclude, r)) continue;
        found.insert(r);
      }
    }
  }
  return {found.begin(), found.end()};
}

TryResult TryOptimization(const NetworkState& state, std::span<const RequestIndex> requests,
                          const std::map<RequestIndex, std::vector<TransportChain>>& candidates,
                          std::span<const RequestIndex> fixed, const SolveOptions& options) {
  TryResult result;
  if (requests.empty()) {
    result.success = true;
    result.proven_optimal = true;
    return result;
  }
  std::vector<CandidateSet> sets;
  auto chains_of = [&](RequestIndex r) {
    auto it = candidates.find(r);
    return it == candidates.end() ? std::vector<TransportChain>{} : it->second;
  };
  for (RequestIndex r : requests) sets.push_back({r, Contains(fixed, r), chains_of(r)});
  for (RequestIndex r : fixed) {
    if (!Contains(requests, r)) sets.push_back({r, true, chains_of(r)});
  }
  try {
    const auto t0 = Clock::now();
    const OptModel model = BuildModel(state, sets);
    result.build_seconds = SecondsSince(t0);
    const auto t1 = Clock::now();
    const Assignment a = Solve(model, options);
    result.solve_seconds = SecondsSince(t1);
    if (!a.feasible) throw InvalidInput("no feasible assignment");
    result.proven_optimal = a.proven_optimal;
    for (std::size_t k = 0; k < model.requests.size(); ++k) {
      if (a.choice[k] >= 0) {
        result.assignment[model.requests[k].request] = model.requests[k].candidates[a.choice[k]];
      }
    }
  } catch (const std::exception&) {
    result.assignment.clear();
  }
  for (RequestIndex r : requests) {
    (result.assignment.contains(r) ? result.routed : result.unrouted).push_back(r);
  }
  // Without a usable assignment nothing may move, fixed requests included.
  if (result.routed.empty()) result.assignment.clear();
  result.success = result.unrouted.empty();
  return result;
}

AssignmentOutcome Assign(NetworkState& state, std::span<const RequestIndex> requests,
                         const AssignConfig& config) {
  return Assigner(state, requests, config).Run();
}

AssignmentOutcome AssignGreedy(NetworkState& state, std::span<const RequestIndex> requests,
                               const AssignConfig& config) {
  return Assigner(state, requests, config).RunGreedy();
}

}  // namespace chainplan
