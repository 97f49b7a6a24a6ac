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

// Whole replays per strategy, and the offline model on its own. The
// argument is the tightness in percent.

#include <vector>

#include <benchmark/benchmark.h>

#include "chainplan/chain_search.h"
#include "chainplan/engine.h"
#include "chainplan/throughput_model.h"
#include "replay.h"
#include "scenario.h"

namespace chainplan {
namespace {

sim::Scenario Family(int tightness_percent, int requests) {
  sim::ScenarioSpec spec;
  spec.stations = 20;
  spec.yards = 3;
  spec.days = 4;
  spec.trains_per_day = 3;
  spec.tightness = tightness_percent / 100.0;
  spec.requests = requests;
  spec.seed = 5;
  return sim::Generate(spec);
}

void ReplayStrategy(benchmark::State& st, sim::Strategy strategy) {
  const sim::Scenario sc = Family(static_cast<int>(st.range(0)), 300);
  sim::ReplayOptions options;
  options.offline_solve.time_budget_seconds = 10;
  sim::RunReport report;
  for (auto _ : st) report = sim::Replay(sc.stream, strategy, options);
  st.counters["routed"] = static_cast<double>(report.routed);
  st.counters["requests"] = static_cast<double>(report.requests);
}

void BM_ReplayGreedy(benchmark::State& st) { ReplayStrategy(st, sim::Strategy::kGreedy); }
void BM_ReplayOnline(benchmark::State& st) { ReplayStrategy(st, sim::Strategy::kOnline); }
void BM_ReplayOffline(benchmark::State& st) { ReplayStrategy(st, sim::Strategy::kOffline); }

BENCHMARK(BM_ReplayGreedy)->Arg(50)->Arg(90)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplayOnline)->Arg(50)->Arg(90)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplayOffline)->Arg(50)->Arg(90)->Unit(benchmark::kMillisecond)->Iterations(1);

// Every booking of a loose scenario with all of its isolated chains, in an
// empty network.
struct OfflineInput {
  NetworkState state;
  std::vector<CandidateSet> candidates;
};

OfflineInput Candidates(int requests) {
  const sim::Scenario sc = Family(50, requests);
  OfflineInput in;
  Engine engine;
  engine.Process(sc.stream.front().message);
  in.state = engine.state();
  SearchOptions o;
  o.capacity = CapacityMode::kIsolated;
  o.limits.max_chains = 1000;
  for (const sim::StreamRecord& rec : sc.stream) {
    const auto* book = std::get_if<BookRequest>(&rec.message.payload);
    if (book == nullptr) continue;
    const RequestIndex r = in.state.AddRequest(book->spec);
    SearchOutcome found = EnumerateChains(in.state, in.state.request(r), o);
    if (!found.chains.empty()) in.candidates.push_back({r, false, std::move(found.chains)});
  }
  return in;
}

void BM_BuildModel(benchmark::State& st) {
  const OfflineInput in = Candidates(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(BuildModel(in.state, in.candidates));
}

void BM_SolveModel(benchmark::State& st) {
  const OfflineInput in = Candidates(static_cast<int>(st.range(0)));
  const OptModel model = BuildModel(in.state, in.candidates);
  Assignment a;
  for (auto _ : st) a = Solve(model);
  const FormalSize size = model.size();
  st.counters["variables"] = static_cast<double>(size.variables());
  st.counters["constraints"] = static_cast<double>(size.constraints());
  st.counters["proven"] = a.proven_optimal ? 1 : 0;
}

BENCHMARK(BM_BuildModel)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveModel)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace chainplan

BENCHMARK_MAIN();
