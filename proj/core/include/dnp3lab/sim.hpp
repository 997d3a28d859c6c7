#pragma once

#include "dnp3lab/error.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_map>
#include <vector>

namespace dnp3lab::sim {

using Duration = std::chrono::microseconds;
using SimTime = std::chrono::microseconds;  // since scenario start

inline double to_ms(Duration d) { return static_cast<double>(d.count()) / 1000.0; }
inline Duration from_ms(double ms) { return Duration(static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5))); }
inline Duration from_s(double s) { return from_ms(s * 1000.0); }

enum class SimErrc { SchedulingInPast };

class SimError : public CodedError<SimErrc> {
public:
    using CodedError::CodedError;
};

using EventId = std::uint64_t;

/// Events ordered by (fire time, insertion order). Cancelled events are
/// skipped lazily when they reach the head of the queue.
class EventQueue {
public:
    using Action = std::function<void()>;

    EventId schedule_at(SimTime at, Action action);
    EventId schedule_in(Duration delay, Action action) { return schedule_at(now_ + delay, std::move(action)); }
    /// Returns false when the event already fired or was cancelled.
    bool cancel(EventId id);

    /// Fires every event with fire time <= end, then leaves the clock at end.
    void run_until(SimTime end);
    /// Fires the next event. Returns false when the queue is empty.
    bool step();

    SimTime now() const noexcept { return now_; }
    std::size_t pending() const noexcept { return actions_.size(); }
    std::uint64_t fired() const noexcept { return fired_; }

private:
    struct Entry {
        SimTime at;
        EventId id;
        bool operator>(const Entry& o) const { return at != o.at ? at > o.at : id > o.id; }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
    std::unordered_map<EventId, Action> actions_;
    SimTime now_{0};
    EventId next_id_ = 1;
    std::uint64_t fired_ = 0;
};

}  // namespace dnp3lab::sim
