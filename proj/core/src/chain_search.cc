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

#include "chainplan/chain_search.h"

#include <algorithm>
#include <chrono>
#include <limits>
#include <queue>
#include <utility>

namespace chainplan {

void SearchLimits::Validate() const {
  if (!(time_budget_seconds > 0) || max_blocks <= 0 || max_frontier <= 0 ||
      max_chains <= 0) {
    throw InvalidInput("search limits must be positive");
  }
}

TieBreakKey MakeTieBreakKey(const NetworkState& state, const TransportChain& chain) {
  if (chain.empty()) throw InvalidInput("tie-break key of an empty chain");
  TieBreakKey key;
  key.arrival = state.block(chain.blocks.back()).deboarding_ready;
  key.departure = state.BlockDeparture(chain.blocks.front());
  key.block_count = static_cast<int>(chain.size());
  for (std::size_t i = 1; i < chain.size(); ++i) {
    key.intermediate_departures.push_back(state.BlockDeparture(chain.blocks[i]));
  }
  for (BlockIndex b : chain.blocks) key.block_ids.push_back(state.block(b).id);
  return key;
}

bool KeyLess(const TieBreakKey& a, const TieBreakKey& b, KeyOrder order) {
  if (order == KeyOrder::kArrivalFirst) {
    return std::tie(a.arrival, a.departure, a.block_count, a.intermediate_departures,
                    a.block_ids) < std::tie(b.arrival, b.departure, b.block_count,
                                            b.intermediate_departures, b.block_ids);
  }
  return std::tie(a.departure, a.arrival, a.block_count, a.intermediate_departures,
                  a.block_ids) < std::tie(b.departure, b.arrival, b.block_count,
                                          b.intermediate_departures, b.block_ids);
}

bool ChainLess(const NetworkState& state, const TransportChain& a,
               const TransportChain& b, KeyOrder order) {
  return KeyLess(MakeTieBreakKey(state, a), MakeTieBreakKey(state, b), order);
}

std::string_view BlockingReasonName(BlockingReason reason) {
  switch (reason) {
    case BlockingReason::kRestriction:
      return "restriction";
    case BlockingReason::kTime:
      return "time";
    case BlockingReason::kCapacity:
      return "capacity";
    case BlockingReason::kTransfer:
      return "transfer";
    case BlockingReason::kLoop:
      return "loop";
    case BlockingReason::kDepth:
      return "depth";
    case BlockingReason::kUnavailable:
      return "unavailable";
  }
  return "unknown";
}

void SearchDiagnostics::Count(int layer, BlockingReason reason) {
  if (static_cast<int>(per_layer.size()) <= layer) per_layer.resize(layer + 1);
  ++per_layer[layer][static_cast<int>(reason)];
}

std::int64_t SearchDiagnostics::Total(BlockingReason reason) const {
  std::int64_t total = 0;
  for (const auto& row : per_layer) total += row[static_cast<int>(reason)];
  return total;
}

std::optional<BlockingReason> SearchDiagnostics::Dominant() const {
  std::optional<BlockingReason> best;
  std::int64_t best_count = 0;
  for (int i = 0; i < kNumBlockingReasons; ++i) {
    const auto reason = static_cast<BlockingReason>(i);
    const std::int64_t n = Total(reason);
    if (n > best_count) {
      best = reason;
      best_count = n;
    }
  }
  return best;
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr Minutes kNoArrival = std::numeric_limits<Minutes>::max();
constexpr int kTimeCheckInterval = 1024;

// Reachable part of the block graph for one request, in local numbering.
struct SearchGraph {
  std::vector<BlockIndex> blocks;
  std::vector<int> local_of;
  std::vector<std::vector<int>> successors;
  std::vector<int> starts;
  std::vector<char> terminal;
  std::vector<Minutes> bound;
  std::vector<Minutes> departure;
  std::vector<int> id_rank;
  std::vector<GroupIndex> adds_group;  // -1 for blocks staying in their group
};

class Search {
 public:
  Search(const NetworkState& state, const Request& request,
         const SearchOptions& options, SearchOutcome& out)
      : state_(state),
        request_(request),
        options_(options),
        out_(out),
        view_(state, options.capacity, options.excluded),
        start_time_(Clock::now()) {
    options.limits.Validate();
    out_.capacity_mode = options.capacity;
    prefix_ = options.prefix_override ? *options.prefix_override
                                      : request.required_prefix;
    split_ = options.prefix_split ? std::min(*options.prefix_split, prefix_.size())
                                  : prefix_.size();
    pickup_ = options.pickup_override.value_or(request.pickup_earliest);
    delivery_ = request.delivery_latest;
    destination_ = state.GroupOf(request.destination);
    usable_.assign(state.num_blocks(), -1);
    stamp_.assign(state.num_blocks(), 0);
  }

  // Returns false when the request needs no search (degenerate, or the
  // prefix already reaches the destination).
  bool Prepare() {
    for (BlockIndex b : prefix_) {
      if (b < 0 || static_cast<std::size_t>(b) >= state_.num_blocks()) {
        throw LookupError("prefix references an unknown block");
      }
    }
    if (prefix_.empty()) {
      if (state_.GroupOf(request_.origin) == destination_) {
        out_.diagnostics.degenerate = true;
        return false;
      }
      return true;
    }
    if (state_.DestinationGroup(prefix_.back()) == destination_) {
      out_.chains.push_back(TransportChain{prefix_, split_});
      return false;
    }
    for (std::size_t i = split_; i < prefix_.size(); ++i) {
      const BlockIndex b = prefix_[i];
      if (i == split_) seed_groups_.push_back(state_.OriginGroup(b));
      if (state_.OriginGroup(b) != state_.DestinationGroup(b)) {
        seed_groups_.push_back(state_.DestinationGroup(b));
      }
    }
    seed_depth_ = static_cast<int>(prefix_.size() - split_);
    return true;
  }

  bool TimeUp() {
    if (out_.truncated.time_limit) return true;
    if (++ticks_ % kTimeCheckInterval != 0) return false;
    if (Elapsed() > options_.limits.time_budget_seconds) {
      out_.truncated.time_limit = true;
    }
    return out_.truncated.time_limit;
  }

  double Elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_time_).count();
  }

  void BuildGraph();
  void RunLabelSetting();
  void RunEnumeration(int max_chains);
  void Finish() { out_.stats.seconds = Elapsed(); }

 private:
  bool Usable(BlockIndex b, int layer);
  int LocalOf(BlockIndex b);
  void CollectCandidates(std::optional<BlockIndex> from, GroupIndex group,
                         Minutes earliest, int layer, std::vector<int>& out);
  void ComputeBounds();
  TransportChain MakeChain(std::span<const int> path) const;
  bool PathLess(std::span<const int> a, std::span<const int> b) const;
  bool FullLess(Minutes arr_a, std::span<const int> a, Minutes arr_b,
                std::span<const int> b) const;
  bool Loops(std::span<const int> path, int next) const;

  const NetworkState& state_;
  const Request& request_;
  const SearchOptions& options_;
  SearchOutcome& out_;
  CapacityView view_;
  Clock::time_point start_time_;
  std::int64_t ticks_ = 0;

  std::vector<BlockIndex> prefix_;
  std::size_t split_ = 0;
  std::vector<GroupIndex> seed_groups_;
  int seed_depth_ = 0;
  Minutes pickup_ = 0;
  Minutes delivery_ = 0;
  GroupIndex destination_ = -1;

  std::vector<signed char> usable_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t current_stamp_ = 0;
  SearchGraph g_;
};

bool Search::Usable(BlockIndex b, int layer) {
  signed char& memo = usable_[b];
  if (memo >= 0) return memo == 1;
  const Block& blk = state_.block(b);
  std::optional<BlockingReason> reason;
  if (!state_.Searchable(b)) {
    reason = BlockingReason::kUnavailable;
  } else if (blk.deboarding_ready > delivery_ && state_.ExtraTargets(b).empty()) {
    reason = BlockingReason::kTime;
  } else if (!BlockAdmits(state_, b, request_)) {
    reason = BlockingReason::kRestriction;
  } else if (!view_.Admits(b, request_.demand)) {
    reason = BlockingReason::kCapacity;
  }
  if (reason) out_.diagnostics.Count(layer, *reason);
  memo = reason ? 0 : 1;
  return memo == 1;
}

int Search::LocalOf(BlockIndex b) {
  if (g_.local_of[b] >= 0) return g_.local_of[b];
  const int id = static_cast<int>(g_.blocks.size());
  g_.local_of[b] = id;
  g_.blocks.push_back(b);
  g_.successors.emplace_back();
  g_.terminal.push_back(state_.DestinationGroup(b) == destination_ &&
                        state_.block(b).deboarding_ready <= delivery_);
  g_.departure.push_back(state_.BlockDeparture(b));
  g_.adds_group.push_back(state_.OriginGroup(b) == state_.DestinationGroup(b)
                              ? -1
                              : state_.DestinationGroup(b));
  return id;
}

// Candidates boarding in `group` no earlier than `earliest`, plus extra
// connections out of `from`. Blocks boarding after the delivery deadline are
// only kept when an extra connection could still bring them back in time.
void Search::CollectCandidates(std::optional<BlockIndex> from, GroupIndex group,
                               Minutes earliest, int layer, std::vector<int>& out) {
  ++current_stamp_;
  auto consider = [&](BlockIndex c) {
    if (stamp_[c] == current_stamp_) return;
    stamp_[c] = current_stamp_;
    if (from) {
      if (c == *from) return;
      if (!Chainable(state_, *from, c)) {
        out_.diagnostics.Count(layer, BlockingReason::kTransfer);
        return;
      }
    }
    if (!Usable(c, layer)) return;
    out.push_back(LocalOf(c));
  };
  if (from && !state_.ExclusiveTargets(*from).empty()) {
    for (BlockIndex c : state_.ExclusiveTargets(*from)) consider(c);
    return;
  }
  const auto& departing = state_.DepartingBlocks(group);
  auto first = std::lower_bound(departing.begin(), departing.end(), earliest,
                                [&](BlockIndex b, Minutes t) {
                                  return state_.block(b).boarding_cutoff < t;
                                });
  const auto skipped = first - departing.begin();
  if (skipped > 0) {
    if (static_cast<int>(out_.diagnostics.per_layer.size()) <= layer) {
      out_.diagnostics.per_layer.resize(layer + 1);
    }
    out_.diagnostics.per_layer[layer][static_cast<int>(BlockingReason::kTime)] +=
        skipped;
  }
  for (auto it = first; it != departing.end(); ++it) {
    if (state_.block(*it).boarding_cutoff > delivery_) break;
    consider(*it);
  }
  for (BlockIndex c : state_.DepartingBlocksWithExtra(group)) {
    if (state_.block(c).boarding_cutoff > delivery_) consider(c);
  }
  if (from) {
    for (BlockIndex c : state_.ExtraTargets(*from)) consider(c);
  }
}

void Search::BuildGraph() {
  g_.local_of.assign(state_.num_blocks(), -1);
  if (prefix_.empty()) {
    CollectCandidates(std::nullopt, state_.GroupOf(request_.origin), pickup_, 0,
                      g_.starts);
  } else {
    const BlockIndex last = prefix_.back();
    CollectCandidates(last, state_.DestinationGroup(last),
                      state_.block(last).deboarding_ready, 0, g_.starts);
  }
  if (g_.starts.empty()) {
    out_.diagnostics.no_departure = true;
    return;
  }
  // Breadth-first discovery; layer numbers feed the diagnostics.
  std::vector<char> expanded;
  std::vector<int> frontier = g_.starts;
  int layer = 0;
  std::vector<int> next;
  while (!frontier.empty()) {
    ++layer;
    next.clear();
    for (int u : frontier) {
      if (TimeUp()) return;
      if (static_cast<int>(expanded.size()) < static_cast<int>(g_.blocks.size())) {
        expanded.resize(g_.blocks.size(), 0);
      }
      if (expanded[u]) continue;
      expanded[u] = 1;
      const BlockIndex b = g_.blocks[u];
      if (state_.DestinationGroup(b) == destination_) continue;
      std::vector<int> succ;
      CollectCandidates(b, state_.DestinationGroup(b),
                        state_.block(b).deboarding_ready, layer, succ);
      for (int v : succ) {
        if (v >= static_cast<int>(expanded.size()) || !expanded[v]) next.push_back(v);
      }
      g_.successors[u] = std::move(succ);
    }
    std::swap(frontier, next);
  }
  ComputeBounds();
  std::vector<int> order(g_.blocks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return state_.block(g_.blocks[a]).id < state_.block(g_.blocks[b]).id;
  });
  g_.id_rank.assign(order.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) g_.id_rank[order[i]] = static_cast<int>(i);
}

// Smallest terminal arrival reachable from each node, ignoring loops and
// depth. Zero-weight backward propagation handles cycles through extra
// connections.
void Search::ComputeBounds() {
  const std::size_t n = g_.blocks.size();
  g_.bound.assign(n, kNoArrival);
  std::vector<std::vector<int>> preds(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (int v : g_.successors[u]) preds[v].push_back(static_cast<int>(u));
  }
  using Item = std::pair<Minutes, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t u = 0; u < n; ++u) {
    if (g_.terminal[u]) {
      g_.bound[u] = state_.block(g_.blocks[u]).deboarding_ready;
      heap.emplace(g_.bound[u], static_cast<int>(u));
    }
  }
  while (!heap.empty()) {
    const auto [h, u] = heap.top();
    heap.pop();
    if (h != g_.bound[u]) continue;
    for (int p : preds[u]) {
      if (g_.terminal[p]) continue;
      if (h < g_.bound[p]) {
        g_.bound[p] = h;
        heap.emplace(h, p);
      }
    }
  }
}

TransportChain Search::MakeChain(std::span<const int> path) const {
  TransportChain chain;
  chain.blocks = prefix_;
  chain.split = split_;
  for (int u : path) chain.blocks.push_back(g_.blocks[u]);
  return chain;
}

// Key order on flexible suffixes sharing the same prefix and arrival:
// departure, block count, intermediate departures, block ids.
bool Search::PathLess(std::span<const int> a, std::span<const int> b) const {
  const bool departure_in_path = prefix_.empty();
  if (departure_in_path && g_.departure[a[0]] != g_.departure[b[0]]) {
    return g_.departure[a[0]] < g_.departure[b[0]];
  }
  if (a.size() != b.size()) return a.size() < b.size();
  for (std::size_t i = departure_in_path ? 1 : 0; i < a.size(); ++i) {
    if (g_.departure[a[i]] != g_.departure[b[i]]) {
      return g_.departure[a[i]] < g_.departure[b[i]];
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return g_.id_rank[a[i]] < g_.id_rank[b[i]];
  }
  return false;
}

bool Search::FullLess(Minutes arr_a, std::span<const int> a, Minutes arr_b,
                      std::span<const int> b) const {
  if (options_.key_order == KeyOrder::kDepartureFirst && prefix_.empty() &&
      g_.departure[a[0]] != g_.departure[b[0]]) {
    return g_.departure[a[0]] < g_.departure[b[0]];
  }
  if (arr_a != arr_b) return arr_a < arr_b;
  return PathLess(a, b);
}

bool Search::Loops(std::span<const int> path, int next) const {
  if (std::find(path.begin(), path.end(), next) != path.end()) return true;
  const GroupIndex g = g_.adds_group[next];
  if (g < 0) return false;
  if (seed_groups_.empty()) {
    const int first = path.empty() ? next : path[0];
    if (state_.OriginGroup(g_.blocks[first]) == g) return true;
  } else if (std::find(seed_groups_.begin(), seed_groups_.end(), g) !=
             seed_groups_.end()) {
    return true;
  }
  for (int u : path) {
    if (g_.adds_group[u] == g) return true;
  }
  return false;
}

// One label per block, ordered by the key restricted to what a block's
// labels can differ in. The best label of a block may revisit a group.
void Search::RunLabelSetting() {
  const std::size_t n = g_.blocks.size();
  if (n == 0) return;
  std::vector<std::vector<int>> best(n);
  std::vector<char> settled(n, 0);
  struct Entry {
    int node;
    std::vector<int> path;
  };
  auto cmp = [this](const Entry& a, const Entry& b) { return PathLess(b.path, a.path); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (int s : g_.starts) {
    if (g_.bound[s] == kNoArrival) continue;
    std::vector<int> path{s};
    if (best[s].empty() || PathLess(path, best[s])) {
      best[s] = path;
      heap.push({s, std::move(path)});
    }
  }
  std::vector<int> result;
  const int depth_room = options_.limits.max_blocks - seed_depth_;
  while (!heap.empty()) {
    if (TimeUp()) return;
    Entry e = heap.top();
    heap.pop();
    if (settled[e.node]) continue;
    settled[e.node] = 1;
    ++out_.stats.expansions;
    if (g_.terminal[e.node]) {
      const Minutes arr = state_.block(g_.blocks[e.node]).deboarding_ready;
      if (result.empty() ||
          FullLess(arr, e.path, state_.block(g_.blocks[result.back()]).deboarding_ready,
                   result)) {
        result = e.path;
      }
      continue;
    }
    if (static_cast<int>(e.path.size()) >= depth_room) {
      out_.truncated.depth_limit = true;
      continue;
    }
    for (int v : g_.successors[e.node]) {
      if (settled[v] || g_.bound[v] == kNoArrival) continue;
      std::vector<int> path = e.path;
      path.push_back(v);
      if (!best[v].empty() && !PathLess(path, best[v])) continue;
      best[v] = path;
      if (++out_.stats.labels > options_.limits.max_frontier) {
        out_.truncated.frontier_limit = true;
        return;
      }
      heap.push({v, std::move(path)});
    }
  }
  if (!result.empty()) out_.chains.push_back(MakeChain(result));
}

void Search::RunEnumeration(int max_chains) {
  const std::size_t n = g_.blocks.size();
  if (n == 0) return;
  struct Node {
    int block;
    std::uint32_t offset;
    std::uint32_t length;
  };
  std::vector<Node> nodes;
  std::vector<int> pool;
  auto path_of = [&](const Node& node) {
    return std::span<const int>(pool.data() + node.offset, node.length);
  };
  struct Entry {
    Minutes bound;
    int node;
  };
  auto cmp = [&](const Entry& a, const Entry& b) {
    return FullLess(b.bound, path_of(nodes[b.node]), a.bound, path_of(nodes[a.node]));
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  auto push = [&](std::span<const int> parent, int v) {
    Node node{v, static_cast<std::uint32_t>(pool.size()),
              static_cast<std::uint32_t>(parent.size() + 1)};
    pool.insert(pool.end(), parent.begin(), parent.end());
    pool.push_back(v);
    nodes.push_back(node);
    heap.push({g_.bound[v], static_cast<int>(nodes.size() - 1)});
  };
  for (int s : g_.starts) {
    if (g_.bound[s] == kNoArrival) continue;
    if (Loops({}, s)) {
      out_.diagnostics.Count(0, BlockingReason::kLoop);
      continue;
    }
    push({}, s);
  }
  const int depth_room = options_.limits.max_blocks - seed_depth_;
  std::vector<int> scratch;
  while (!heap.empty()) {
    if (TimeUp()) return;
    const Entry e = heap.top();
    heap.pop();
    const Node node = nodes[e.node];
    ++out_.stats.expansions;
    if (g_.terminal[node.block]) {
      out_.chains.push_back(MakeChain(path_of(node)));
      if (static_cast<int>(out_.chains.size()) >= max_chains) {
        if (!heap.empty()) out_.truncated.count_limit = true;
        return;
      }
      continue;
    }
    const int depth = static_cast<int>(node.length);
    if (depth >= depth_room) {
      out_.truncated.depth_limit = true;
      out_.diagnostics.Count(depth, BlockingReason::kDepth);
      continue;
    }
    scratch.assign(path_of(node).begin(), path_of(node).end());
    for (int v : g_.successors[node.block]) {
      if (g_.bound[v] == kNoArrival) continue;
      if (Loops(scratch, v)) {
        out_.diagnostics.Count(depth, BlockingReason::kLoop);
        continue;
      }
      if (static_cast<std::int64_t>(nodes.size()) >= options_.limits.max_frontier) {
        out_.truncated.frontier_limit = true;
        break;
      }
      push(scratch, v);
    }
    out_.stats.labels = static_cast<std::int64_t>(nodes.size());
  }
}

bool FlexibleLoops(const NetworkState& state, const TransportChain& chain) {
  return !IsLoopFree(state, chain.flexible());
}

}  // namespace

SearchOutcome EnumerateChains(const NetworkState& state, const Request& request,
                              const SearchOptions& options) {
  SearchOutcome out;
  Search search(state, request, options, out);
  if (search.Prepare()) {
    search.BuildGraph();
    if (!out.truncated.time_limit) search.RunEnumeration(options.limits.max_chains);
  }
  search.Finish();
  return out;
}

SearchOutcome FindBestChain(const NetworkState& state, const Request& request,
                            const SearchOptions& options) {
  SearchOutcome out;
  Search search(state, request, options, out);
  if (search.Prepare()) {
    search.BuildGraph();
    if (!out.truncated.time_limit) search.RunLabelSetting();
    const bool loopy = !out.chains.empty() && FlexibleLoops(state, out.chains.front());
    const bool cut = out.truncated.depth_limit || out.truncated.frontier_limit;
    if (!out.truncated.time_limit && (loopy || cut)) {
      out.chains.clear();
      out.truncated = TruncationFlags{};
      out.stats.used_fallback = true;
      search.RunEnumeration(1);
      out.truncated.count_limit = false;
    }
  }
  search.Finish();
  return out;
}

}  // namespace chainplan
