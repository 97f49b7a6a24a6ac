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

// Chain search on a generated state, half of its bookings already placed.
// The argument is the number of days in the timetable.

#include <vector>

#include <benchmark/benchmark.h>

#include "chainplan/chain_search.h"
#include "chainplan/engine.h"
#include "scenario.h"

namespace chainplan {
namespace {

struct Loaded {
  NetworkState state;
  std::vector<RequestIndex> probes;
};

Loaded Load(int days) {
  sim::ScenarioSpec spec;
  spec.stations = 60;
  spec.yards = 6;
  spec.days = days;
  spec.trains_per_day = 6;
  spec.tightness = 0.9;
  spec.requests = 100 * days;
  spec.seed = 11;
  const sim::Scenario sc = sim::Generate(spec);
  Engine engine;
  std::vector<RequestSpec> held;
  int bookings = 0;
  for (const sim::StreamRecord& rec : sc.stream) {
    const auto* book = std::get_if<BookRequest>(&rec.message.payload);
    if (book != nullptr && ++bookings % 2 == 0) {
      held.push_back(book->spec);
      continue;
    }
    engine.Process(rec.message);
  }
  Loaded out{engine.state(), {}};
  for (const RequestSpec& spec : held) out.probes.push_back(out.state.AddRequest(spec));
  return out;
}

void Search(benchmark::State& st, CapacityMode mode, bool enumerate) {
  const Loaded loaded = Load(static_cast<int>(st.range(0)));
  SearchOptions o;
  o.capacity = mode;
  std::size_t i = 0;
  std::int64_t chains = 0;
  for (auto _ : st) {
    const Request& r = loaded.state.request(loaded.probes[i++ % loaded.probes.size()]);
    const SearchOutcome out =
        enumerate ? EnumerateChains(loaded.state, r, o) : FindBestChain(loaded.state, r, o);
    chains += static_cast<std::int64_t>(out.chains.size());
    benchmark::DoNotOptimize(out);
  }
  st.counters["blocks"] = static_cast<double>(loaded.state.num_blocks());
  st.counters["chains"] = benchmark::Counter(static_cast<double>(chains),
                                             benchmark::Counter::kAvgIterations);
}

void BM_FindBestChainRespect(benchmark::State& st) { Search(st, CapacityMode::kRespect, false); }
void BM_FindBestChainIgnore(benchmark::State& st) { Search(st, CapacityMode::kIgnore, false); }
void BM_EnumerateIsolated(benchmark::State& st) { Search(st, CapacityMode::kIsolated, true); }

BENCHMARK(BM_FindBestChainRespect)->Arg(3)->Arg(14)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FindBestChainIgnore)->Arg(3)->Arg(14)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EnumerateIsolated)->Arg(3)->Arg(14)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace chainplan

BENCHMARK_MAIN();
