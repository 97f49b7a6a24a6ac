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

#include "replay.h"

#include <chrono>
#include <cstdio>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "chainplan/throughput_model.h"

namespace chainplan::sim {
namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void Tally(const NetworkState& s, RunReport* r) {
  for (std::size_t i = 0; i < s.num_requests(); ++i) {
    const Request& req = s.request(static_cast<RequestIndex>(i));
    if (!req.alive) continue;
    ++r->requests;
    switch (req.status) {
      case RequestStatus::kAssigned:
      case RequestStatus::kManual:
        ++r->routed;
        break;
      case RequestStatus::kPartial:
        ++r->partial;
        break;
      default:
        ++r->unrouted;
    }
  }
}

void Offline(NetworkState& s, const ReplayOptions& options, RunReport* r) {
  std::vector<CandidateSet> candidates;
  std::vector<RequestIndex> hopeless;
  for (std::size_t i = 0; i < s.num_requests(); ++i) {
    const auto ri = static_cast<RequestIndex>(i);
    const Request& req = s.request(ri);
    if (!req.alive || req.manual || req.status == RequestStatus::kManual) continue;
    SearchOptions o;
    o.capacity = CapacityMode::kIsolated;
    o.limits = options.offline_limits;
    o.key_order = options.engine.assign.key_order;
    SearchOutcome found = EnumerateChains(s, req, o);
    r->times.enumerate += found.stats.seconds;
    r->truncated |= found.truncated.any();
    if (found.chains.empty()) {
      hopeless.push_back(ri);
      continue;
    }
    candidates.push_back({ri, false, std::move(found.chains)});
  }
  auto t0 = Clock::now();
  const OptModel model = BuildModel(s, candidates);
  r->times.build_model += Since(t0);
  const FormalSize size = model.size();
  r->model_variables = size.variables();
  r->model_constraints = size.constraints();
  if (options.lp_out) model.WriteLp(*options.lp_out, s);
  t0 = Clock::now();
  const Assignment a = Solve(model, options.offline_solve);
  r->times.solve += Since(t0);
  r->proven_optimal = a.proven_optimal;
  r->solve = a.stats;
  if (a.proven_optimal) {
    r->routed_bound = a.routed_count();
  } else {
    // Each routed request is worth at least denominator * priority minus
    // a rank, and all ranks together stay under one denominator.
    int min_priority = 1;
    for (std::size_t i = 0; i < model.requests.size(); ++i) {
      min_priority = i == 0 ? model.requests[i].priority
                            : std::min(min_priority, model.requests[i].priority);
    }
    const double den = static_cast<double>(model.denominator);
    r->routed_bound = static_cast<std::int64_t>(
        std::floor((a.scaled_bound + den - 1) / (den * std::max(1, min_priority)) + 1e-9));
  }
  for (const auto& [ri, chain] : a.Routed(model)) {
    s.SetChain(ri, chain, RequestStatus::kAssigned);
    ++r->outcomes[static_cast<int>(OutcomeKind::kRouted)];
  }
  for (RequestIndex ri : a.Unrouted(model)) {
    s.SetRejected(ri, std::string(OutcomeName(OutcomeKind::kNoCapacity)));
    ++r->outcomes[static_cast<int>(OutcomeKind::kNoCapacity)];
  }
  for (RequestIndex ri : hopeless) {
    s.SetRejected(ri, std::string(OutcomeName(OutcomeKind::kNotRoutable)));
    ++r->outcomes[static_cast<int>(OutcomeKind::kNotRoutable)];
  }
}

std::string Fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string Percent(double v) { return Fixed(100 * v, 1) + "%"; }

}  // namespace

std::string_view StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kGreedy:
      return "greedy";
    case Strategy::kOnline:
      return "online";
    case Strategy::kOffline:
      return "offline";
  }
  return "?";
}

std::optional<Strategy> ParseStrategy(std::string_view name) {
  for (Strategy s : {Strategy::kGreedy, Strategy::kOnline, Strategy::kOffline}) {
    if (StrategyName(s) == name) return s;
  }
  return std::nullopt;
}

double RunReport::bfs_share() const {
  if (assignments == 0) return 0;
  const auto early = finished_at[static_cast<int>(AssignmentStage::kIsolatedBfs)] +
                     finished_at[static_cast<int>(AssignmentStage::kCapacityBfs)];
  return static_cast<double>(early) / assignments;
}

std::string StateDigest(const NetworkState& state) {
  const std::string text = MessageToJson(Message{ExportState(state)}).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunReport Replay(const std::vector<StreamRecord>& stream, Strategy strategy,
                 const ReplayOptions& options) {
  const auto t0 = Clock::now();
  EngineConfig config = options.engine;
  config.policy = strategy == Strategy::kGreedy   ? AssignPolicy::kGreedy
                  : strategy == Strategy::kOnline ? AssignPolicy::kStaged
                                                  : AssignPolicy::kHold;
  Engine engine(config);
  RunReport r;
  r.strategy = strategy;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    ++r.messages;
    try {
      engine.Process(stream[i].message);
    } catch (const InvalidInput&) {
      ++r.rejected_messages;
    } catch (const LookupError&) {
      ++r.rejected_messages;
    }
    if (options.observer) options.observer(i, engine);
  }
  const EngineStats& st = engine.stats();
  r.times = st.times;
  r.assignments = st.assignments;
  r.resolved_at = st.resolved_at;
  r.finished_at = st.finished_at;
  r.stage_searches = st.stage_searches;
  r.stage_seconds = st.stage_seconds;
  if (strategy == Strategy::kOffline) {
    NetworkState s = engine.state();
    Offline(s, options, &r);
    Tally(s, &r);
    r.state_digest = StateDigest(s);
  } else {
    r.outcomes = st.outcomes;
    Tally(engine.state(), &r);
    r.state_digest = StateDigest(engine.state());
  }
  r.seconds = Since(t0);
  return r;
}

void WriteCsv(std::ostream& out, const std::vector<RunReport>& reports) {
  out << "strategy,messages,rejected_messages,requests,routed,routed_share,partial,unrouted";
  for (int k = 0; k < kNumOutcomeKinds; ++k) {
    out << ",outcome_" << OutcomeName(static_cast<OutcomeKind>(k));
  }
  out << ",assignments,bfs_share";
  for (int k = 0; k < kNumStages; ++k) {
    out << ",finished_" << StageName(static_cast<AssignmentStage>(k));
  }
  for (int k = 0; k < kNumStages; ++k) {
    out << ",seconds_" << StageName(static_cast<AssignmentStage>(k));
  }
  out << ",seconds_best_chain,seconds_enumerate,seconds_build_model,seconds_solve,seconds_total"
         ",truncated,proven_optimal,model_variables,model_constraints,solve_nodes,"
         "solve_components,routed_bound,state_digest\n";
  for (const RunReport& r : reports) {
    out << StrategyName(r.strategy) << ',' << r.messages << ',' << r.rejected_messages << ','
        << r.requests << ',' << r.routed << ',' << Fixed(r.routed_share(), 4) << ','
        << r.partial << ',' << r.unrouted;
    for (auto v : r.outcomes) out << ',' << v;
    out << ',' << r.assignments << ',' << Fixed(r.bfs_share(), 4);
    for (auto v : r.finished_at) out << ',' << v;
    for (auto v : r.stage_seconds) out << ',' << Fixed(v, 6);
    out << ',' << Fixed(r.times.best_chain, 6) << ',' << Fixed(r.times.enumerate, 6) << ','
        << Fixed(r.times.build_model, 6) << ',' << Fixed(r.times.solve, 6) << ','
        << Fixed(r.seconds, 6) << ',' << (r.truncated ? "true" : "false") << ','
        << (r.proven_optimal ? "true" : "false") << ',' << r.model_variables << ','
        << r.model_constraints << ',' << r.solve.nodes << ',' << r.solve.components << ','
        << r.routed_bound << ',' << r.state_digest << '\n';
  }
}

void WriteTable(std::ostream& out, const std::vector<RunReport>& reports) {
  if (reports.empty()) return;
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  auto row = [&](const std::string& name, auto&& cell) {
    std::vector<std::string> cells;
    for (const RunReport& r : reports) cells.push_back(cell(r));
    rows.emplace_back(name, std::move(cells));
  };
  row("strategy", [](const RunReport& r) { return std::string(StrategyName(r.strategy)); });
  row("messages", [](const RunReport& r) { return std::to_string(r.messages); });
  row("rejected messages", [](const RunReport& r) { return std::to_string(r.rejected_messages); });
  row("requests", [](const RunReport& r) { return std::to_string(r.requests); });
  row("routed", [](const RunReport& r) {
    return std::to_string(r.routed) + " (" + Percent(r.routed_share()) + ")";
  });
  row("partial", [](const RunReport& r) { return std::to_string(r.partial); });
  row("unrouted", [](const RunReport& r) { return std::to_string(r.unrouted); });
  std::int64_t outcomes = 0;
  for (const RunReport& r : reports) {
    for (auto v : r.outcomes) outcomes += v;
  }
  if (outcomes > 0) {
    for (int k = 0; k < kNumOutcomeKinds; ++k) {
      row("outcome " + std::string(OutcomeName(static_cast<OutcomeKind>(k))),
          [k](const RunReport& r) { return std::to_string(r.outcomes[k]); });
    }
  }
  std::int64_t calls = 0;
  for (const RunReport& r : reports) calls += r.assignments;
  if (calls > 0) {
    row("assign calls", [](const RunReport& r) { return std::to_string(r.assignments); });
    row("ended before enumeration", [](const RunReport& r) {
      return r.assignments == 0 ? std::string("-") : Percent(r.bfs_share());
    });
    for (int k = 0; k < kNumStages; ++k) {
      row("ended at " + std::string(StageName(static_cast<AssignmentStage>(k))),
          [k](const RunReport& r) { return std::to_string(r.finished_at[k]); });
    }
    for (int k = 0; k < kNumStages; ++k) {
      row("seconds " + std::string(StageName(static_cast<AssignmentStage>(k))),
          [k](const RunReport& r) { return Fixed(r.stage_seconds[k], 3); });
    }
  }
  auto share = [](double part, const RunReport& r) {
    const double total =
        r.times.best_chain + r.times.enumerate + r.times.build_model + r.times.solve;
    return Fixed(part, 3) + (total > 0 ? " (" + Percent(part / total) + ")" : "");
  };
  row("best chain s", [&](const RunReport& r) { return share(r.times.best_chain, r); });
  row("enumerate s", [&](const RunReport& r) { return share(r.times.enumerate, r); });
  row("build model s", [&](const RunReport& r) { return share(r.times.build_model, r); });
  row("solve s", [&](const RunReport& r) { return share(r.times.solve, r); });
  row("wall s", [](const RunReport& r) { return Fixed(r.seconds, 3); });
  row("truncated", [](const RunReport& r) { return std::string(r.truncated ? "yes" : "no"); });
  row("proven optimal",
      [](const RunReport& r) { return std::string(r.proven_optimal ? "yes" : "no"); });
  row("model vars/cons", [](const RunReport& r) {
    return std::to_string(r.model_variables) + "/" + std::to_string(r.model_constraints);
  });
  row("solve nodes", [](const RunReport& r) { return std::to_string(r.solve.nodes); });
  row("solve components", [](const RunReport& r) { return std::to_string(r.solve.components); });
  row("routed bound", [](const RunReport& r) { return std::to_string(r.routed_bound); });
  row("state digest", [](const RunReport& r) { return r.state_digest; });

  std::size_t name_width = 0;
  std::vector<std::size_t> widths(reports.size(), 0);
  for (const auto& [name, cells] : rows) {
    name_width = std::max(name_width, name.size());
    for (std::size_t i = 0; i < cells.size(); ++i) widths[i] = std::max(widths[i], cells[i].size());
  }
  for (const auto& [name, cells] : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << name;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << "  " << std::right << std::setw(static_cast<int>(widths[i])) << cells[i];
    }
    out << '\n';
  }
}

void WriteComparison(std::ostream& out, const std::vector<RunReport>& reports) {
  WriteTable(out, reports);
  const RunReport* by[3] = {nullptr, nullptr, nullptr};
  for (const RunReport& r : reports) by[static_cast<int>(r.strategy)] = &r;
  auto delta = [&](Strategy hi, Strategy lo) {
    const RunReport* a = by[static_cast<int>(hi)];
    const RunReport* b = by[static_cast<int>(lo)];
    if (!a || !b) return;
    const std::int64_t d = a->routed - b->routed;
    out << StrategyName(hi) << " - " << StrategyName(lo) << ": " << (d >= 0 ? "+" : "") << d;
    if (a->routed > 0) out << " (" << Percent(static_cast<double>(d) / a->routed) << " of "
                           << StrategyName(hi) << ")";
    out << '\n';
  };
  out << '\n';
  delta(Strategy::kOffline, Strategy::kGreedy);
  delta(Strategy::kOffline, Strategy::kOnline);
  delta(Strategy::kOnline, Strategy::kGreedy);
}

}  // namespace chainplan::sim
