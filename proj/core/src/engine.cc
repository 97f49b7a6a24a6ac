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

#include "chainplan/engine.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <limits>

namespace chainplan {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

// ---- ProductTable ----

void ProductTable::Set(const std::string& product, Minutes max_window) {
  if (max_window <= 0) throw InvalidInput("product '" + product + "': window must be positive");
  windows_[product] = max_window;
}

std::optional<Minutes> ProductTable::Window(const std::string& product) const {
  auto it = windows_.find(product);
  if (it == windows_.end()) return std::nullopt;
  return it->second;
}

ProductTable ProductTable::FromJson(const json& j) {
  ProductTable table;
  try {
    for (const json& p : j.at("products")) {
      const std::string name = p.at("name").get<std::string>();
      if (p.contains("max_window_minutes")) {
        table.Set(name, p["max_window_minutes"].get<Minutes>());
      } else {
        table.Set(name, p.at("max_window_hours").get<Minutes>() * 60);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("product table: ") + e.what());
  }
  return table;
}

ProductTable ProductTable::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open product table '" + path + "'");
  try {
    return FromJson(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InvalidInput("product table '" + path + "': " + e.what());
  }
}

// ---- stats ----

json StatsToJson(const EngineStats& s) {
  json calls = json::object();
  json seconds = json::object();
  for (int k = 0; k < kNumMessageKinds; ++k) {
    const std::string name(MessageKindName(static_cast<MessageKind>(k)));
    calls[name] = s.messages[k];
    seconds[name] = s.message_seconds[k];
  }
  calls["dryrun-search"] = s.dryrun_searches;
  calls["dryrun-validate-chain"] = s.dryrun_validations;
  seconds["dryrun"] = s.dryrun_seconds;
  seconds["revalidation"] = s.wave_seconds;

  json outcomes = json::object();
  json outcome_seconds = json::object();
  for (int k = 0; k < kNumOutcomeKinds; ++k) {
    const std::string name(OutcomeName(static_cast<OutcomeKind>(k)));
    outcomes[name] = s.outcomes[k];
    outcome_seconds[name] = s.outcome_seconds[k];
  }
  json resolved = json::object();
  json finished = json::object();
  json stage_seconds = json::object();
  json searches = json::object();
  json optimizations = json::object();
  for (int k = 0; k < kNumStages; ++k) {
    const std::string name(StageName(static_cast<AssignmentStage>(k)));
    resolved[name] = s.resolved_at[k];
    finished[name] = s.finished_at[k];
    stage_seconds[name] = s.stage_seconds[k];
    searches[name] = s.stage_searches[k];
    optimizations[name] = s.stage_optimizations[k];
  }
  return {{"api_calls", calls},
          {"backend_seconds", seconds},
          {"rejected_messages", s.rejected},
          {"assignments",
           {{"calls", s.assignments},
            {"outcomes", outcomes},
            {"outcome_seconds", outcome_seconds},
            {"resolved_at", resolved},
            {"finished_at", finished},
            {"stage_seconds", stage_seconds},
            {"searches", searches},
            {"optimizations", optimizations},
            {"cache_hits", s.cache_hits}}},
          {"function_seconds",
           {{"best_chain", s.times.best_chain},
            {"enumerate", s.times.enumerate},
            {"build_model", s.times.build_model},
            {"solve", s.times.solve}}},
          {"revalidation",
           {{"waves", s.waves},
            {"revalidated", s.revalidated},
            {"unchanged", s.unchanged},
            {"recompleted", s.recompleted},
            {"partial", s.partial},
            {"reassigned", s.reassigned},
            {"searches", s.revalidation_searches}}}};
}

// ---- Engine ----

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
  config_.assign.limits.Validate();
}

RequestSpec Engine::CompleteSpec(RequestSpec spec, bool has_deadline) const {
  if (has_deadline) return spec;
  const auto window = config_.products.Window(spec.product);
  if (!window) {
    throw InvalidInput("request '" + spec.id + "' has no deadline and product '" +
                       spec.product + "' has no window");
  }
  spec.delivery_latest = spec.pickup_earliest + *window;
  return spec;
}

Request Engine::ResolveForDryRun(const RequestSpec& spec, bool has_deadline) const {
  return state_.ResolveRequest(CompleteSpec(spec, has_deadline));
}

TransportChain Engine::ResolveChain(const ChainSpec& spec) const {
  TransportChain chain;
  for (const std::string& id : spec.blocks) chain.blocks.push_back(state_.BlockIndexOf(id));
  if (spec.split > chain.blocks.size()) throw InvalidInput("chain split beyond its length");
  chain.split = spec.split;
  return chain;
}

void Engine::MarkBlock(BlockIndex b, std::set<RequestIndex>* out) const {
  for (RequestIndex r : state_.BlockRequests(b)) out->insert(r);
}

void Engine::MarkSegment(SegmentIndex s, std::set<RequestIndex>* out) const {
  for (BlockIndex b : state_.SegmentBlocks(s)) MarkBlock(b, out);
}

void Engine::Init(const InitState& init) {
  auto build = [&init](NetworkState& s) {
    for (const Station& st : init.stations) s.UpsertStation(st);
    for (const TrainSpec& t : init.trains) s.UpsertTrain(t.id, t.segments);
    for (const BlockSpec& b : init.blocks) s.UpsertBlock(b);
    for (const ConnectionSpec& c : init.connections) {
      if (c.kind) s.SetConnection(s.BlockIndexOf(c.from), s.BlockIndexOf(c.to), *c.kind);
    }
    for (const RequestRecord& rec : init.requests) {
      const RequestIndex r = s.AddRequest(rec.spec);
      TransportChain chain;
      for (const std::string& id : rec.chain.blocks) chain.blocks.push_back(s.BlockIndexOf(id));
      if (rec.chain.split > chain.blocks.size()) {
        throw InvalidInput("request '" + rec.spec.id + "': chain split beyond its length");
      }
      chain.split = rec.chain.split;
      RequestStatus status = rec.status;
      if (chain.empty() && status != RequestStatus::kRejected) {
        status = RequestStatus::kUnassigned;
      }
      if (status == RequestStatus::kRejected) {
        s.SetRejected(r, "rejected before init");
      } else {
        s.SetChain(r, std::move(chain), status);
      }
      if (rec.promised_arrival) s.SetPromisedArrival(r, rec.promised_arrival);
    }
  };
  // Validate on a scratch state first so a bad payload leaves ours intact.
  NetworkState scratch;
  build(scratch);
  state_.Reset();
  build(state_);
  pending_.clear();
  parked_.clear();
  orphaned_.clear();
  cache_.Clear();
}

void Engine::Record(const AssignmentOutcome& out) {
  ++stats_.assignments;
  const double share = out.results.empty() ? 0 : out.seconds / out.results.size();
  for (const RequestOutcome& r : out.results) {
    ++stats_.outcomes[static_cast<int>(r.kind)];
    stats_.outcome_seconds[static_cast<int>(r.kind)] += share;
    if (r.kind == OutcomeKind::kRouted && r.stage) {
      ++stats_.resolved_at[static_cast<int>(*r.stage)];
    }
  }
  int deepest = 0;
  for (int k = 0; k < kNumStages; ++k) {
    if (out.stages[k].searches + out.stages[k].optimizations > 0) deepest = k;
    stats_.stage_seconds[k] += out.stages[k].seconds;
    stats_.stage_searches[k] += out.stages[k].searches;
    stats_.stage_optimizations[k] += out.stages[k].optimizations;
  }
  ++stats_.finished_at[deepest];
  stats_.times.best_chain += out.times.best_chain;
  stats_.times.enumerate += out.times.enumerate;
  stats_.times.build_model += out.times.build_model;
  stats_.times.solve += out.times.solve;
  stats_.cache_hits += out.cache_hits;
}

BookingResult Engine::AssignOne(RequestIndex r) {
  AssignConfig cfg = config_.assign;
  cfg.cache = config_.use_cache ? &cache_ : nullptr;
  const std::vector<RequestIndex> one = {r};
  const AssignmentOutcome out = config_.policy == AssignPolicy::kGreedy
                                    ? AssignGreedy(state_, one, cfg)
                                    : Assign(state_, one, cfg);
  Record(out);
  const RequestOutcome& res = out.results.front();
  BookingResult b;
  b.request = r;
  b.outcome = res.kind;
  b.stage = res.stage;
  if (res.kind == OutcomeKind::kRouted) {
    b.chain = res.chain;
    const Request& req = state_.request(r);
    if (!req.promised_arrival) {
      state_.SetPromisedArrival(r, state_.block(res.chain.blocks.back()).deboarding_ready);
    }
  }
  b.promised_arrival = state_.request(r).promised_arrival;
  return b;
}

BookingResult Engine::AssignOrReject(RequestIndex r) {
  if (state_.request(r).manual || config_.policy == AssignPolicy::kHold) {
    BookingResult b;
    b.request = r;
    b.attempted = false;
    return b;
  }
  BookingResult b = AssignOne(r);
  if (b.outcome != OutcomeKind::kRouted) {
    state_.SetRejected(r, std::string(OutcomeName(b.outcome)));
  }
  return b;
}

BookingResult Engine::Book(const RequestSpec& spec) {
  const RequestIndex r = state_.AddRequest(spec);
  try {
    return AssignOrReject(r);
  } catch (...) {
    state_.CancelRequest(r);
    throw;
  }
}

RevalidationRecord Engine::Revalidate(RequestIndex r) {
  const Request& req = state_.request(r);
  RevalidationRecord rec;
  rec.request = r;
  rec.before = req.chain;
  rec.status = req.status;
  rec.after = req.chain;
  rec.cut = req.chain.size();
  if (!req.alive || !req.HoldsCapacity() || req.status == RequestStatus::kManual) return rec;
  ++stats_.revalidated;

  const TransportChain chain = req.chain;
  const std::size_t n = chain.size();
  const std::size_t split = std::min(chain.split, n);
  const bool partial = req.status == RequestStatus::kPartial;
  ValidationOptions v;
  v.excluded = {r};
  const ValidationResult check = ValidateChain(state_, req, chain, v);
  std::size_t cut = n;
  for (const Violation& viol : check.violations) {
    if (viol.position < 0) {
      if (viol.kind == ViolationKind::kDegenerate) cut = 0;
      continue;
    }
    const auto pos = static_cast<std::size_t>(viol.position);
    // Required blocks stay unless they are gone.
    if (pos < split && viol.kind != ViolationKind::kUnavailableBlock) continue;
    if (partial && pos + 1 == n && viol.kind == ViolationKind::kDestinationMismatch) continue;
    cut = std::min(cut, pos);
  }
  rec.cut = cut;
  if (cut == n && !partial) {
    ++stats_.unchanged;
    return rec;
  }

  TransportChain kept;
  kept.blocks.assign(chain.blocks.begin(), chain.blocks.begin() + static_cast<std::ptrdiff_t>(cut));
  kept.split = std::min(split, cut);
  if (kept.empty()) {
    state_.ClearChain(r, RequestStatus::kUnassigned);
    rec.after = {};
    rec.status = RequestStatus::kUnassigned;
    ++stats_.partial;
    return rec;
  }

  SearchOptions o;
  o.capacity = CapacityMode::kRespect;
  o.limits = config_.assign.limits;
  o.key_order = config_.assign.key_order;
  o.excluded = {r};
  o.prefix_override = kept.blocks;
  o.prefix_split = kept.split;
  const SearchOutcome found = FindBestChain(state_, req, o);
  rec.searched = true;
  ++stats_.revalidation_searches;
  stats_.times.best_chain += found.stats.seconds;
  if (!found.chains.empty()) {
    state_.SetChain(r, found.chains.front(), RequestStatus::kAssigned);
    if (found.chains.front() == chain) {
      ++stats_.unchanged;
    } else {
      ++stats_.recompleted;
    }
  } else {
    state_.SetChain(r, kept, RequestStatus::kPartial);
    ++stats_.partial;
  }
  rec.after = state_.request(r).chain;
  rec.status = state_.request(r).status;
  return rec;
}

WaveResult Engine::RunWave() {
  const auto t0 = Clock::now();
  ++stats_.waves;
  // Partial chains are retried on every wave.
  std::set<RequestIndex> due = std::move(pending_);
  pending_.clear();
  for (std::size_t r = 0; r < state_.num_requests(); ++r) {
    const Request& req = state_.request(static_cast<RequestIndex>(r));
    if (req.alive && req.status == RequestStatus::kPartial)
      due.insert(static_cast<RequestIndex>(r));
  }
  std::vector<RequestIndex> order(due.begin(), due.end());
  auto promise = [this](RequestIndex r) {
    return state_.request(r).promised_arrival.value_or(std::numeric_limits<Minutes>::max());
  };
  std::stable_sort(order.begin(), order.end(), [&](RequestIndex a, RequestIndex b) {
    return promise(a) < promise(b);
  });
  WaveResult wave;
  std::vector<RequestIndex> emptied;
  for (RequestIndex r : order) {
    const Request& req = state_.request(r);
    if (!req.alive || !req.HoldsCapacity() || req.status == RequestStatus::kManual) continue;
    RevalidationRecord rec = Revalidate(r);
    if (rec.after.empty()) emptied.push_back(r);
    wave.records.push_back(std::move(rec));
  }
  // Emptied chains stay unassigned and are retried on later waves.
  orphaned_.insert(emptied.begin(), emptied.end());
  for (auto it = orphaned_.begin(); it != orphaned_.end();) {
    const Request& req = state_.request(*it);
    if (!req.alive || req.manual || req.status != RequestStatus::kUnassigned) {
      it = orphaned_.erase(it);
      continue;
    }
    BookingResult b = AssignOne(*it);
    ++stats_.reassigned;
    const bool routed = b.outcome == OutcomeKind::kRouted;
    wave.reassigned.push_back(std::move(b));
    it = routed ? orphaned_.erase(it) : std::next(it);
  }
  stats_.wave_seconds += Since(t0);
  return wave;
}

MessageEffects Engine::Apply(const Message& message) {
  const auto t0 = Clock::now();
  const auto kind = static_cast<int>(message.kind());
  ++stats_.messages[kind];
  MessageEffects fx;
  fx.kind = message.kind();
  std::set<RequestIndex> marked;
  bool network = false;
  try {
    std::visit(
        Overloaded{
            [&](const InitState& init) {
              Init(init);
              fx.changed.push_back("state");
            },
            [&](const TrainSpec& t) {
              for (SegmentIndex s : state_.TrainSegments(t.id)) MarkSegment(s, &marked);
              for (const SegmentSpec& seg : t.segments) {
                if (auto s = state_.FindSegment(seg.id)) MarkSegment(*s, &marked);
              }
              state_.UpsertTrain(t.id, t.segments);
              fx.changed.push_back(t.id);
              network = true;
            },
            [&](const DeleteTrain& d) {
              for (SegmentIndex s : state_.TrainSegments(d.id)) MarkSegment(s, &marked);
              state_.DeleteTrain(d.id);
              fx.changed.push_back(d.id);
              network = true;
            },
            [&](const BlockUpdate& u) {
              const auto existing = state_.FindBlock(u.block.id);
              if (u.deleted) {
                const BlockIndex b = state_.BlockIndexOf(u.block.id);
                MarkBlock(b, &marked);
                state_.DeleteBlock(b);
              } else {
                if (existing) {
                  MarkBlock(*existing, &marked);
                  for (SegmentIndex s : state_.block(*existing).segments) {
                    MarkSegment(s, &marked);
                  }
                }
                state_.UpsertBlock(u.block);
              }
              fx.changed.push_back(u.block.id);
              network = true;
            },
            [&](const SegmentSpec& seg) {
              if (auto s = state_.FindSegment(seg.id)) MarkSegment(*s, &marked);
              state_.UpsertSegment(seg);
              fx.changed.push_back(seg.id);
              network = true;
            },
            [&](const ConnectionSpec& c) {
              const BlockIndex from = state_.BlockIndexOf(c.from);
              const BlockIndex to = state_.BlockIndexOf(c.to);
              MarkBlock(from, &marked);
              if (c.kind) {
                state_.SetConnection(from, to, *c.kind);
              } else {
                state_.RemoveConnection(from, to);
              }
              fx.changed.push_back(c.from + "->" + c.to);
              network = true;
            },
            [&](const RestrictionUpdate& u) {
              const BlockIndex b = state_.BlockIndexOf(u.block);
              MarkBlock(b, &marked);
              state_.SetRestrictions(b, u.restrictions);
              fx.changed.push_back(u.block);
              network = true;
            },
            [&](const ReservationUpdate& u) {
              const BlockIndex b = state_.BlockIndexOf(u.block);
              for (SegmentIndex s : state_.block(b).segments) MarkSegment(s, &marked);
              state_.SetReservation(b, u.reservation);
              fx.changed.push_back(u.block);
              network = true;
            },
            [&](const BookRequest& b) {
              fx.booking = Book(CompleteSpec(b.spec, b.has_deadline));
              fx.changed.push_back(b.spec.id);
            },
            [&](const UpdateRequest& u) {
              const RequestIndex r = state_.RequestIndexOf(u.spec.id);
              state_.UpdateRequest(r, CompleteSpec(u.spec, u.has_deadline));
              fx.changed.push_back(u.spec.id);
              pending_.erase(r);
              parked_.erase(r);
              const Request& req = state_.request(r);
              if (req.status == RequestStatus::kManual) return;
              if (req.HoldsCapacity()) {
                fx.revalidation = Revalidate(r);
                if (!fx.revalidation->after.empty()) return;
              }
              fx.booking = AssignOrReject(r);
            },
            [&](const CancelRequest& c) {
              const RequestIndex r = state_.RequestIndexOf(c.id);
              state_.CancelRequest(r);
              pending_.erase(r);
              parked_.erase(r);
              fx.changed.push_back(c.id);
            },
            [&](const ManualChain& m) {
              const RequestIndex r = state_.RequestIndexOf(m.request);
              TransportChain chain = ResolveChain(m.chain);
              const bool empty = chain.empty();
              state_.SetChain(r, std::move(chain),
                              empty ? RequestStatus::kUnassigned : RequestStatus::kManual);
              pending_.erase(r);
              parked_.erase(r);
              fx.changed.push_back(m.request);
            },
            [&](const TriggerCompute&) {
              pending_.insert(parked_.begin(), parked_.end());
              parked_.clear();
              fx.wave_due = true;
            },
        },
        message.payload);
  } catch (...) {
    ++stats_.rejected;
    stats_.message_seconds[kind] += Since(t0);
    throw;
  }
  if (network) {
    fx.affected.assign(marked.begin(), marked.end());
    if (message.defer) {
      parked_.insert(marked.begin(), marked.end());
      fx.deferred = true;
    } else {
      pending_.insert(marked.begin(), marked.end());
      fx.wave_due = true;
    }
  }
  stats_.message_seconds[kind] += Since(t0);
  return fx;
}

MessageEffects Engine::Process(const Message& message) {
  MessageEffects fx = Apply(message);
  if (fx.wave_due) fx.wave = RunWave();
  return fx;
}

SearchOutcome Engine::DryRunSearch(const RequestSpec& spec, bool has_deadline,
                                   const SearchOptions& options) {
  const auto t0 = Clock::now();
  ++stats_.dryrun_searches;
  const Request req = ResolveForDryRun(spec, has_deadline);
  SearchOutcome out = EnumerateChains(state_, req, options);
  stats_.dryrun_seconds += Since(t0);
  return out;
}

SearchOutcome Engine::DryRunSearch(RequestIndex request, const SearchOptions& options) {
  const auto t0 = Clock::now();
  ++stats_.dryrun_searches;
  SearchOptions o = options;
  o.excluded.push_back(request);
  SearchOutcome out = EnumerateChains(state_, state_.request(request), o);
  stats_.dryrun_seconds += Since(t0);
  return out;
}

ValidationResult Engine::DryRunValidate(const Request& request, const ChainSpec& spec,
                                        bool required) {
  const auto t0 = Clock::now();
  ++stats_.dryrun_validations;
  TransportChain chain = ResolveChain(spec);
  if (required) chain.split = chain.size();
  ValidationOptions v;
  if (auto r = state_.FindRequest(request.id)) v.excluded = {*r};
  ValidationResult out = ValidateChain(state_, request, chain, v);
  stats_.dryrun_seconds += Since(t0);
  return out;
}

void Engine::RecoverLedger() { state_.RebuildLedger(); }

}  // namespace chainplan
