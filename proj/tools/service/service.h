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

// HTTP front end over the backend queue.
//
// Every mutating endpoint becomes one message processed by the worker:
// bookings, request updates and cancellations run interactive, network
// messages and triggers run background together with the wave they cause.
// With a record path set, the worker appends each processed message to an
// NDJSON log in execution order, so a replay reproduces the run.

#ifndef CHAINPLAN_TOOLS_SERVICE_H_
#define CHAINPLAN_TOOLS_SERVICE_H_

#include <fstream>
#include <future>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "chainplan/backend.h"

namespace httplib {
class Server;
}

namespace chainplan::service {

struct ServiceOptions {
  EngineConfig engine;
  std::string record_path;
};

nlohmann::json BookingToJson(const NetworkState& state, const BookingResult& b);
nlohmann::json RevalidationToJson(const NetworkState& state, const RevalidationRecord& r);
nlohmann::json WaveToJson(const NetworkState& state, const WaveResult& w);
nlohmann::json EffectsToJson(const NetworkState& state, const MessageEffects& fx);
nlohmann::json SearchOutcomeToJson(const NetworkState& state, const SearchOutcome& out);
nlohmann::json SnapshotToJson(const BackendSnapshot& snap);
std::string NowIso();

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  void Mount(httplib::Server& server);
  Backend& backend() { return *backend_; }

  // Runs `m` on the worker and returns the effects as JSON; throws what
  // Engine::Process throws.
  nlohmann::json Submit(Priority priority, const Message& m);
  std::future<nlohmann::json> Enqueue(Priority priority, const Message& m);

 private:
  std::unique_ptr<std::ofstream> record_;
  std::unique_ptr<Backend> backend_;
};

}  // namespace chainplan::service

#endif  // CHAINPLAN_TOOLS_SERVICE_H_
