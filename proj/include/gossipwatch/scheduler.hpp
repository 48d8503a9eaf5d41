// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "gossipwatch/common.hpp"

namespace gossipwatch {

/// Clock plus deferred execution. Every long-running service in the crawler
/// is expressed as tasks posted here, so the same code runs against the
/// simulator's virtual clock.
class Scheduler {
 public:
  using Task = std::function<void()>;

  virtual ~Scheduler() = default;

  virtual TimeMs now() const = 0;

  /// Runs `task` at `at`. Times in the past run at the current time.
  virtual void post_at(TimeMs at, Task task) = 0;

  void post_after(TimeMs delay, Task task) {
    post_at(now() + delay, std::move(task));
  }
};

}  // namespace gossipwatch
