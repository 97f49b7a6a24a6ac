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

#include "chainplan/backend.h"

namespace chainplan {

Backend::Backend(EngineConfig config) : engine_(std::move(config)) {
  Publish();
  worker_ = std::thread([this] { Run(); });
}

Backend::~Backend() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  wake_.notify_all();
  worker_.join();
}

void Backend::Push(Priority priority, Task task) {
  {
    std::lock_guard lock(mu_);
    (priority == Priority::kInteractive ? interactive_ : background_).push_back(std::move(task));
  }
  wake_.notify_one();
}

void Backend::ScheduleWave() {
  {
    std::lock_guard lock(mu_);
    if (wave_queued_) return;
    wave_queued_ = true;
    Task wave;
    wave.run = [this](Engine& e) {
      {
        std::lock_guard inner(mu_);
        wave_queued_ = false;
      }
      e.RunWave();
    };
    background_.push_back(std::move(wave));
  }
  wake_.notify_one();
}

void Backend::WaitIdle() {
  std::unique_lock lock(mu_);
  idle_.wait(lock, [this] { return !busy_ && interactive_.empty() && background_.empty(); });
}

std::shared_ptr<const BackendSnapshot> Backend::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

void Backend::Publish() {
  auto snap = std::make_shared<BackendSnapshot>();
  const NetworkState& s = engine_.state();
  snap->version = s.version();
  snap->network_version = s.network_version();
  snap->stations = s.num_stations();
  snap->segments = s.num_segments();
  snap->blocks = s.num_blocks();
  snap->requests = s.num_requests();
  snap->connections = s.num_connections();
  snap->pending = engine_.pending();
  snap->parked = engine_.parked();
  snap->stats = engine_.stats();
  std::lock_guard lock(mu_);
  snap->queued_interactive = interactive_.size();
  snap->queued_background = background_.size();
  snap->executed_interactive = executed_[0];
  snap->executed_background = executed_[1];
  snap->failed = failed_;
  snapshot_ = std::move(snap);
}

void Backend::Run() {
  for (;;) {
    Task task;
    int cls = 0;
    {
      std::unique_lock lock(mu_);
      wake_.wait(lock, [this] { return stop_ || !interactive_.empty() || !background_.empty(); });
      if (stop_) return;
      if (!interactive_.empty()) {
        task = std::move(interactive_.front());
        interactive_.pop_front();
      } else {
        task = std::move(background_.front());
        background_.pop_front();
        cls = 1;
      }
      busy_ = true;
    }
    bool ok = true;
    try {
      task.run(engine_);
    } catch (...) {
      ok = false;
      engine_.RecoverLedger();
    }
    {
      std::lock_guard lock(mu_);
      ++executed_[cls];
      if (!ok) ++failed_;
    }
    Publish();
    if (task.done) task.done();
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    idle_.notify_all();
  }
}

}  // namespace chainplan
