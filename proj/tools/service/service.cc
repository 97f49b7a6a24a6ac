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

#include "service.h"

#include <chrono>
#include <ctime>
#include <future>
#include <vector>

#include <httplib.h>

namespace chainplan::service {
namespace {

using nlohmann::json;

json ErrorBody(int code, std::string_view reason, std::vector<std::string> details) {
  return {{"code", code}, {"reason", reason}, {"details", std::move(details)}};
}

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

// Maps exceptions to the error body.
template <typename Fn>
void Guard(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const json::exception& e) {
    Reply(res, 400, ErrorBody(400, "malformed-json", {e.what()}));
  } catch (const InvalidInput& e) {
    Reply(res, 400, ErrorBody(400, "invalid-input", {e.what()}));
  } catch (const LookupError& e) {
    Reply(res, 404, ErrorBody(404, "unknown-reference", {e.what()}));
  } catch (const std::exception& e) {
    Reply(res, 500, ErrorBody(500, "internal", {e.what()}));
  }
}

json ErrorFor(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const InvalidInput& e) {
    return ErrorBody(400, "invalid-input", {e.what()});
  } catch (const LookupError& e) {
    return ErrorBody(404, "unknown-reference", {e.what()});
  } catch (const std::exception& e) {
    return ErrorBody(500, "internal", {e.what()});
  }
}

json ParseBody(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

Priority PriorityFor(MessageKind kind) {
  switch (kind) {
    case MessageKind::kBookRequest:
    case MessageKind::kUpdateRequest:
    case MessageKind::kCancelRequest:
    case MessageKind::kManualChain:
    case MessageKind::kInitState:
      return Priority::kInteractive;
    default:
      return Priority::kBackground;
  }
}

bool ParseBool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidInput("expected true or false, got '" + v + "'");
}

SearchOptions OptionsFromJson(const json& j) {
  SearchOptions o;
  if (!j.is_object()) return o;
  if (j.contains("capacity")) {
    const std::string m = j.at("capacity").get<std::string>();
    if (m == "respect") {
      o.capacity = CapacityMode::kRespect;
    } else if (m == "isolated") {
      o.capacity = CapacityMode::kIsolated;
    } else if (m == "ignore") {
      o.capacity = CapacityMode::kIgnore;
    } else {
      throw InvalidInput("unknown capacity mode '" + m + "'");
    }
  }
  if (j.contains("max_chains")) o.limits.max_chains = j.at("max_chains").get<int>();
  if (j.contains("max_blocks")) o.limits.max_blocks = j.at("max_blocks").get<int>();
  if (j.contains("time_budget_seconds")) {
    o.limits.time_budget_seconds = j.at("time_budget_seconds").get<double>();
  }
  o.limits.Validate();
  return o;
}

std::optional<std::string> RequestIdOf(const json& body) {
  if (body.contains("request_id")) return body.at("request_id").get<std::string>();
  return std::nullopt;
}

}  // namespace

std::string NowIso() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json BookingToJson(const NetworkState& state, const BookingResult& b) {
  const Request& r = state.request(b.request);
  json j = {{"request", r.id}, {"status", RequestStatusName(r.status)}};
  if (!b.attempted) {
    j["outcome"] = nullptr;
    return j;
  }
  j["outcome"] = OutcomeName(b.outcome);
  j["chain"] = ChainToJson(state, b.chain);
  j["stage"] = b.stage ? json(StageName(*b.stage)) : json(nullptr);
  j["promised_arrival"] =
      b.promised_arrival ? json(FormatInstant(*b.promised_arrival)) : json(nullptr);
  return j;
}

json RevalidationToJson(const NetworkState& state, const RevalidationRecord& r) {
  return {{"request", state.request(r.request).id},
          {"before", ChainToJson(state, r.before)},
          {"after", ChainToJson(state, r.after)},
          {"status", RequestStatusName(r.status)},
          {"cut", r.cut},
          {"searched", r.searched}};
}

json WaveToJson(const NetworkState& state, const WaveResult& w) {
  json records = json::array();
  for (const auto& r : w.records) records.push_back(RevalidationToJson(state, r));
  json reassigned = json::array();
  for (const auto& b : w.reassigned) reassigned.push_back(BookingToJson(state, b));
  return {{"revalidated", records}, {"reassigned", reassigned}};
}

json EffectsToJson(const NetworkState& state, const MessageEffects& fx) {
  json affected = json::array();
  for (RequestIndex r : fx.affected) affected.push_back(state.request(r).id);
  json j = {{"kind", MessageKindName(fx.kind)},
            {"changed", fx.changed},
            {"affected", affected},
            {"deferred", fx.deferred}};
  if (fx.booking) j["booking"] = BookingToJson(state, *fx.booking);
  if (fx.revalidation) j["revalidation"] = RevalidationToJson(state, *fx.revalidation);
  if (fx.wave) j["wave"] = WaveToJson(state, *fx.wave);
  return j;
}

json SearchOutcomeToJson(const NetworkState& state, const SearchOutcome& out) {
  json chains = json::array();
  for (const TransportChain& c : out.chains) {
    json cj = ChainToJson(state, c);
    if (!c.empty()) {
      cj["departure"] = FormatInstant(state.block(c.blocks.front()).boarding_cutoff);
      cj["arrival"] = FormatInstant(state.block(c.blocks.back()).deboarding_ready);
    }
    chains.push_back(std::move(cj));
  }
  json blocked = json::object();
  for (int k = 0; k < kNumBlockingReasons; ++k) {
    const auto reason = static_cast<BlockingReason>(k);
    const std::int64_t n = out.diagnostics.Total(reason);
    if (n > 0) blocked[std::string(BlockingReasonName(reason))] = n;
  }
  const auto dominant = out.diagnostics.Dominant();
  return {{"chains", chains},
          {"capacity_mode", CapacityModeName(out.capacity_mode)},
          {"truncated",
           {{"time_limit", out.truncated.time_limit},
            {"depth_limit", out.truncated.depth_limit},
            {"frontier_limit", out.truncated.frontier_limit},
            {"count_limit", out.truncated.count_limit}}},
          {"infeasibility",
           {{"degenerate", out.diagnostics.degenerate},
            {"no_departure", out.diagnostics.no_departure},
            {"blocked", blocked},
            {"dominant", dominant ? json(BlockingReasonName(*dominant)) : json(nullptr)}}},
          {"seconds", out.stats.seconds}};
}

json SnapshotToJson(const BackendSnapshot& snap) {
  return {{"state",
           {{"version", snap.version},
            {"network_version", snap.network_version},
            {"stations", snap.stations},
            {"segments", snap.segments},
            {"blocks", snap.blocks},
            {"requests", snap.requests},
            {"connections", snap.connections},
            {"pending_revalidations", snap.pending},
            {"parked_revalidations", snap.parked}}},
          {"queue",
           {{"queued_interactive", snap.queued_interactive},
            {"queued_background", snap.queued_background},
            {"executed_interactive", snap.executed_interactive},
            {"executed_background", snap.executed_background},
            {"failed", snap.failed}}},
          {"stats", StatsToJson(snap.stats)}};
}

Service::Service(ServiceOptions options) {
  if (!options.record_path.empty()) {
    record_ = std::make_unique<std::ofstream>(options.record_path, std::ios::trunc);
    if (!*record_) throw std::runtime_error("cannot open " + options.record_path);
  }
  backend_ = std::make_unique<Backend>(std::move(options.engine));
}

Service::~Service() { backend_.reset(); }

std::future<json> Service::Enqueue(Priority priority, const Message& m) {
  return backend_->Submit(priority, [this, m](Engine& e) {
    if (record_) {
      *record_ << MessageToJson(m).dump() << '\n';
      record_->flush();
    }
    return EffectsToJson(e.state(), e.Process(m));
  });
}

json Service::Submit(Priority priority, const Message& m) { return Enqueue(priority, m).get(); }

void Service::Mount(httplib::Server& server) {
  server.Post("/state/init", [this](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      const json body = ParseBody(req);
      const Message m = MessageFromJson({{"kind", "init-state"}, {"payload", body}});
      Submit(Priority::kInteractive, m);
      Reply(res, 200, SnapshotToJson(*backend_->snapshot()));
    });
  });

  server.Post("/messages", [this](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      std::optional<bool> defer;
      if (req.has_param("defer")) defer = ParseBool(req.get_param_value("defer"));
      const json body = ParseBody(req);
      if (!body.is_array()) throw InvalidInput("expected an array of messages");
      // Parse everything first so a malformed batch queues nothing.
      std::vector<Message> messages;
      for (const json& j : body) {
        Message m = MessageFromJson(j);
        if (defer) m.defer = *defer;
        messages.push_back(std::move(m));
      }
      std::vector<std::future<json>> futures;
      for (const Message& m : messages) {
        futures.push_back(Enqueue(PriorityFor(m.kind()), m));
      }
      json results = json::array();
      int rejected = 0;
      for (std::size_t i = 0; i < futures.size(); ++i) {
        try {
          json r = futures[i].get();
          r["index"] = i;
          results.push_back(std::move(r));
        } catch (...) {
          ++rejected;
          results.push_back({{"index", i}, {"error", ErrorFor(std::current_exception())}});
        }
      }
      Reply(res, 200, {{"accepted", futures.size() - rejected},
                       {"rejected", rejected},
                       {"results", results}});
    });
  });

  server.Post("/compute/trigger", [this](const httplib::Request&, httplib::Response& res) {
    Guard(res, [&] { Reply(res, 200, Submit(Priority::kBackground, Message{TriggerCompute{}})); });
  });

  server.Post("/requests", [this](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      bool has_deadline = false;
      const RequestSpec spec = RequestSpecFromJson(ParseBody(req), &has_deadline);
      const json fx = Submit(Priority::kInteractive, Message{BookRequest{spec, has_deadline}});
      Reply(res, 201, fx.at("booking"));
    });
  });

  server.Put(R"(/requests/([^/]+))", [this](const httplib::Request& req,
                                            httplib::Response& res) {
    Guard(res, [&] {
      json body = ParseBody(req);
      const std::string id = req.matches[1];
      if (body.contains("id") && body.at("id") != id) {
        throw InvalidInput("body id does not match the path");
      }
      body["id"] = id;
      bool has_deadline = false;
      const RequestSpec spec = RequestSpecFromJson(body, &has_deadline);
      Reply(res, 200, Submit(Priority::kInteractive, Message{UpdateRequest{spec, has_deadline}}));
    });
  });

  server.Delete(R"(/requests/([^/]+))", [this](const httplib::Request& req,
                                               httplib::Response& res) {
    Guard(res, [&] {
      Reply(res, 200,
            Submit(Priority::kInteractive, Message{CancelRequest{std::string(req.matches[1])}}));
    });
  });

  server.Post("/dryrun/search", [this](const httplib::Request& req, httplib::Response& res) {
    Guard(res, [&] {
      const json body = ParseBody(req);
      const SearchOptions options = OptionsFromJson(body.value("options", json::object()));
      const auto id = RequestIdOf(body);
      bool has_deadline = false;
      std::optional<RequestSpec> spec;
      if (!id) spec = RequestSpecFromJson(body.at("request"), &has_deadline);
      const json out = backend_
                           ->Submit(Priority::kInteractive,
                                    [&](Engine& e) {
                                      const SearchOutcome o =
                                          id ? e.DryRunSearch(e.state().RequestIndexOf(*id),
                                                              options)
                                             : e.DryRunSearch(*spec, has_deadline, options);
                                      return SearchOutcomeToJson(e.state(), o);
                                    })
                           .get();
      Reply(res, 200, out);
    });
  });

  server.Post("/dryrun/validate-chain", [this](const httplib::Request& req,
                                               httplib::Response& res) {
    Guard(res, [&] {
      const json body = ParseBody(req);
      const auto id = RequestIdOf(body);
      bool has_deadline = false;
      std::optional<RequestSpec> spec;
      if (!id) spec = RequestSpecFromJson(body.at("request"), &has_deadline);
      const ChainSpec chain = ChainSpecFromJson(body.at("chain"));
      const bool required = body.value("required", false);
      const json out =
          backend_
              ->Submit(Priority::kInteractive,
                       [&](Engine& e) {
                         const Request r = id ? e.state().request(e.state().RequestIndexOf(*id))
                                              : e.ResolveForDryRun(*spec, has_deadline);
                         const ValidationResult v = e.DryRunValidate(r, chain, required);
                         return json{{"ok", v.ok()}, {"violations", ViolationsToJson(v)}};
                       })
              .get();
      Reply(res, 200, out);
    });
  });

  server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    json j = SnapshotToJson(*backend_->snapshot());
    j["time"] = NowIso();
    Reply(res, 200, j);
  });

  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto snap = backend_->snapshot();
    Reply(res, 200, {{"status", "ok"},
                     {"time", NowIso()},
                     {"version", snap->version},
                     {"queued", snap->queued_interactive + snap->queued_background},
                     {"failed_tasks", snap->failed}});
  });
}

}  // namespace chainplan::service
