// SPDX-License-Identifier: Apache-2.0
#include "gossipwatch/simnet/event_loop.hpp"

#include <algorithm>

namespace gossipwatch::simnet {

void EventLoop::post_at(TimeMs at, Task task) {
  heap_.push_back(Item{std::max(at, now_), seq_++, std::move(task)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

bool EventLoop::step() {
  if (heap_.empty()) {
    return false;
  }
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  Item item = std::move(heap_.back());
  heap_.pop_back();
  now_ = item.at;
  ++executed_;
  item.task();
  return true;
}

bool EventLoop::run_until(TimeMs end, const std::function<bool()> &interrupted) {
  while (!heap_.empty() && heap_.front().at <= end) {
    if (interrupted && interrupted()) {
      return false;
    }
    step();
  }
  now_ = std::max(now_, end);
  return true;
}

}  // namespace gossipwatch::simnet
