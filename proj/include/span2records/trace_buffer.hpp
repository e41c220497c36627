#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <map>
#include <unordered_map>
#include <vector>

#include "span2records/span_model.hpp"

namespace span2records {

struct CompletedTrace {
  TraceId trace_id;
  std::vector<OtelSpan> spans;
};

// Collects spans per trace until no span for that trace arrived for
// `completion_timeout`. Not synchronized; callers serialize access. Time is
// passed in explicitly so the completion rule can be driven by a test clock.
class TraceBuffer {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TraceBuffer(Clock::duration completion_timeout = std::chrono::seconds(10))
      : timeout_(completion_timeout) {}

  // Returns the number of spans that replaced an earlier span with the same
  // span id (last write wins).
  std::size_t add(std::vector<OtelSpan> spans, Clock::time_point now) {
    std::size_t replaced = 0;
    for (auto& s : spans) {
      auto& entry = pending_[s.trace_id];
      entry.last_arrival = now;
      auto [it, inserted] = entry.index.emplace(s.span_id, entry.spans.size());
      if (inserted) {
        entry.spans.push_back(std::move(s));
      } else {
        entry.spans[it->second] = std::move(s);
        ++replaced;
      }
    }
    return replaced;
  }

  // Removes and returns traces idle for at least the timeout, oldest last
  // arrival first.
  std::vector<CompletedTrace> take_expired(Clock::time_point now) {
    return take_if([&](const Entry& e) { return now - e.last_arrival >= timeout_; });
  }

  std::vector<CompletedTrace> take_all() {
    return take_if([](const Entry&) { return true; });
  }

  std::size_t pending_traces() const noexcept { return pending_.size(); }
  Clock::duration completion_timeout() const noexcept { return timeout_; }

 private:
  struct Entry {
    std::vector<OtelSpan> spans;
    std::unordered_map<SpanId, std::size_t> index;
    Clock::time_point last_arrival;
  };

  template <typename Pred>
  std::vector<CompletedTrace> take_if(Pred pred) {
    std::vector<std::pair<Clock::time_point, CompletedTrace>> due;
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (pred(it->second)) {
        due.emplace_back(it->second.last_arrival,
                         CompletedTrace{it->first, std::move(it->second.spans)});
        it = pending_.erase(it);
      } else {
        ++it;
      }
    }
    std::stable_sort(due.begin(), due.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<CompletedTrace> out;
    out.reserve(due.size());
    for (auto& [_, trace] : due) out.push_back(std::move(trace));
    return out;
  }

  Clock::duration timeout_;
  std::map<TraceId, Entry> pending_;
};

}  // namespace span2records
