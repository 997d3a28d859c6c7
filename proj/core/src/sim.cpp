#include "dnp3lab/sim.hpp"

#include <fmt/format.h>

namespace dnp3lab::sim {

EventId EventQueue::schedule_at(SimTime at, Action action) {
    if (at < now_) {
        throw SimError(SimErrc::SchedulingInPast,
                       fmt::format("event scheduled at {} us, clock is at {} us", at.count(), now_.count()));
    }
    EventId id = next_id_++;
    heap_.push(Entry{at, id});
    actions_.emplace(id, std::move(action));
    return id;
}

bool EventQueue::cancel(EventId id) { return actions_.erase(id) > 0; }

bool EventQueue::step() {
    while (!heap_.empty()) {
        Entry top = heap_.top();
        heap_.pop();
        auto it = actions_.find(top.id);
        if (it == actions_.end()) continue;
        Action action = std::move(it->second);
        actions_.erase(it);
        now_ = top.at;
        ++fired_;
        action();
        return true;
    }
    return false;
}

void EventQueue::run_until(SimTime end) {
    while (!heap_.empty()) {
        Entry top = heap_.top();
        if (top.at > end) break;
        if (!actions_.contains(top.id)) {
            heap_.pop();
            continue;
        }
        step();
    }
    if (end > now_) now_ = end;
}

}  // namespace dnp3lab::sim
