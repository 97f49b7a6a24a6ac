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

// Priority task queue with one worker that owns the engine.
//
// Interactive tasks run before background ones; each class is FIFO. After
// every task the worker publishes an immutable snapshot for status readers.
// A task that throws is reported through its future; the ledger is rebuilt
// so later tasks see a consistent state.

#ifndef CHAINPLAN_BACKEND_H_
#define CHAINPLAN_BACKEND_H_

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>

#include "chainplan/engine.h"

namespace chainplan {

enum class Priority { kInteractive, kBackground };

struct BackendSnapshot {
  std::uint64_t version = 0;
  std::uint64_t network_version = 0;
  std::size_t stations = 0;
  std::size_t segments = 0;
  std::size_t blocks = 0;
  std::size_t requests = 0;
  std::size_t connections = 0;
  std::size_t pending = 0;
  std::size_t parked = 0;
  std::size_t queued_interactive = 0;
  std::size_t queued_background = 0;
  std::int64_t executed_interactive = 0;
  std::int64_t executed_background = 0;
  std::int64_t failed = 0;
  EngineStats stats;
};

class Backend {
 public:
  explicit Backend(EngineConfig config = {});
  ~Backend();
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  // Queues `fn(Engine&)`; the future carries its result or exception.
  template <typename Fn>
  auto Submit(Priority priority, Fn&& fn) -> std::future<std::invoke_result_t<Fn&, Engine&>> {
    using R = std::invoke_result_t<Fn&, Engine&>;
    using Slot = std::conditional_t<std::is_void_v<R>, bool, std::optional<R>>;
    struct Shared {
      std::promise<R> promise;
      std::decay_t<Fn> body;
      Slot value{};
      std::exception_ptr error;
    };
    auto shared = std::make_shared<Shared>(Shared{{}, std::forward<Fn>(fn), {}, nullptr});
    std::future<R> result = shared->promise.get_future();
    Task task;
    task.run = [shared](Engine& e) {
      try {
        if constexpr (std::is_void_v<R>) {
          shared->body(e);
        } else {
          shared->value.emplace(shared->body(e));
        }
      } catch (...) {
        shared->error = std::current_exception();
        throw;
      }
    };
    task.done = [shared] {
      if (shared->error) {
        shared->promise.set_exception(shared->error);
      } else if constexpr (std::is_void_v<R>) {
        shared->promise.set_value();
      } else {
        shared->promise.set_value(std::move(*shared->value));
      }
    };
    Push(priority, std::move(task));
    return result;
  }

  // Queues a revalidation wave unless one is already waiting.
  void ScheduleWave();
  // Blocks until both queues are empty and the worker is idle.
  void WaitIdle();
  std::shared_ptr<const BackendSnapshot> snapshot() const;

 private:
  // `done` runs after the snapshot is published, so a caller woken by the
  // future reads its own write.
  struct Task {
    std::function<void(Engine&)> run;
    std::function<void()> done;
  };
  void Push(Priority priority, Task task);
  void Run();
  void Publish();

  Engine engine_;
  mutable std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<Task> interactive_;
  std::deque<Task> background_;
  bool busy_ = false;
  bool stop_ = false;
  bool wave_queued_ = false;
  std::int64_t executed_[2] = {0, 0};
  std::int64_t failed_ = 0;
  std::shared_ptr<const BackendSnapshot> snapshot_;
  std::thread worker_;
};

}  // namespace chainplan

#endif  // CHAINPLAN_BACKEND_H_
