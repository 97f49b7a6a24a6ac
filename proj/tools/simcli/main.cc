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

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "replay.h"
#include "scenario.h"

namespace {

using namespace chainplan;

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return nlohmann::json::parse(in);
}

void Emit(const std::vector<sim::RunReport>& reports, const std::string& format, bool compare) {
  if (format == "csv") {
    sim::WriteCsv(std::cout, reports);
  } else if (compare) {
    sim::WriteComparison(std::cout, reports);
  } else {
    sim::WriteTable(std::cout, reports);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainplan scenario generator and replay tool"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Write a synthetic scenario stream");
  std::string spec_path;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string preset;
  auto* spec_opt =
      gen->add_option("--spec", spec_path, "Scenario spec (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--preset", preset, "Fixed scenario instead of a spec")
      ->check(CLI::IsMember({"adv1"}))
      ->excludes(spec_opt);
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--out", out_dir, "Output directory")->required();

  std::string in_path;
  std::string products;
  std::string report = "table";
  double budget = 5.0;
  double solve_budget = 0;

  auto* replay = app.add_subcommand("replay", "Replay a stream with one strategy");
  std::string strategy_name = "online";
  std::string lp_path;
  replay->add_option("--in", in_path, "Scenario directory or NDJSON stream")->required()
      ->check(CLI::ExistingPath);
  replay->add_option("--strategy", strategy_name, "greedy, online or offline")
      ->check(CLI::IsMember({"greedy", "online", "offline"}));
  replay->add_option("--report", report, "csv or table")->check(CLI::IsMember({"csv", "table"}));
  replay->add_option("--lp", lp_path, "Write the offline model in LP format");
  replay->add_option("--products", products, "Product table (JSON)")->check(CLI::ExistingFile);
  replay->add_option("--time-budget", budget, "Seconds per assignment")->check(CLI::PositiveNumber);
  replay->add_option("--solve-budget", solve_budget, "Seconds for the offline solve")
      ->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "Replay with every strategy and show deltas");
  compare->add_option("--in", in_path, "Scenario directory or NDJSON stream")->required()
      ->check(CLI::ExistingPath);
  compare->add_option("--report", report, "csv or table")->check(CLI::IsMember({"csv", "table"}));
  compare->add_option("--products", products, "Product table (JSON)")->check(CLI::ExistingFile);
  compare->add_option("--time-budget", budget, "Seconds per assignment")
      ->check(CLI::PositiveNumber);
  compare->add_option("--solve-budget", solve_budget, "Seconds for the offline solve")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (spec_path.empty() == preset.empty()) {
        std::cerr << "generate needs --spec or --preset\n";
        return 2;
      }
      if (!preset.empty()) {
        const sim::Scenario scenario = sim::Adversarial();
        sim::WriteScenario(scenario, out_dir);
        std::cout << sim::SummaryToJson(scenario.summary).dump(2) << '\n';
        return 0;
      }
      sim::ScenarioSpec spec = sim::ScenarioSpecFromJson(ReadJsonFile(spec_path));
      spec.seed = seed;
      const sim::Scenario scenario = sim::Generate(spec);
      sim::WriteScenario(scenario, out_dir);
      std::cout << sim::SummaryToJson(scenario.summary).dump(2) << '\n';
      return 0;
    }
    sim::ReplayOptions options;
    options.engine.assign.time_budget_seconds = budget;
    if (solve_budget > 0) options.offline_solve.time_budget_seconds = solve_budget;
    if (!products.empty()) options.engine.products = ProductTable::Load(products);
    const auto stream = sim::ReadStream(in_path);
    if (replay->parsed()) {
      const sim::Strategy strategy = *sim::ParseStrategy(strategy_name);
      std::ofstream lp;
      if (!lp_path.empty()) {
        if (strategy != sim::Strategy::kOffline) {
          std::cerr << "--lp needs --strategy offline\n";
          return 2;
        }
        lp.open(lp_path, std::ios::trunc);
        if (!lp) throw std::runtime_error("cannot write " + lp_path);
        options.lp_out = &lp;
      }
      Emit({sim::Replay(stream, strategy, options)}, report, false);
      return 0;
    }
    std::vector<sim::RunReport> reports;
    for (auto s : {sim::Strategy::kGreedy, sim::Strategy::kOnline, sim::Strategy::kOffline}) {
      reports.push_back(sim::Replay(stream, s, options));
    }
    Emit(reports, report, true);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "simcli: " << e.what() << '\n';
    return 1;
  }
}
