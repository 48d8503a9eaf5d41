// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "gossipwatch/scheduler.hpp"

namespace gossipwatch::simnet {

/// Start of virtual time: 2020-09-13T12:26:40Z in Unix milliseconds, so
/// simulated snapshots carry plausible positive timestamps.
inline constexpr TimeMs kSimEpochMs = 1'600'000'000'000;

/// Discrete-event scheduler over a virtual clock. Tasks run in time order;
/// tasks posted for the same instant run in posting order.
class EventLoop final : public Scheduler {
 public:
  explicit EventLoop(TimeMs start = kSimEpochMs) : now_(start) {}

  TimeMs now() const override { return now_; }
  void post_at(TimeMs at, Task task) override;

  /// Runs the earliest task. Returns false when nothing is queued.
  bool step();

  /// Runs every task due at or before `end`, then advances the clock to
  /// `end`. Stops early, leaving the clock at the last task run, when
  /// `interrupted` returns true. Returns false if interrupted.
  bool run_until(TimeMs end, const std::function<bool()> &interrupted = {});

  std::size_t pending() const { return heap_.size(); }
  std::uint64_t executed() const { return executed_; }

 private:
  struct Item {
    TimeMs at;
    std::uint64_t seq;
    Task task;
  };
  struct Later {
    bool operator()(const Item &a, const Item &b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  TimeMs now_;
  std::uint64_t seq_ = 0;
  std::uint64_t executed_ = 0;
  std::vector<Item> heap_;
};

}  // namespace gossipwatch::simnet
