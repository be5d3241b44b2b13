#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "ntnsim/error.hpp"
#include "ntnsim/time.hpp"

namespace ntnsim {

/// One scheduled occurrence. `kind` and the payload slots are owned by the
/// simulation layer; (fire_time, sequence) totally orders the queue so equal
/// fire times dispatch in scheduling order.
struct Event {
    TimeUs fire_time = 0;
    std::uint64_t sequence = 0;
    int kind = 0;
    int entity = -1;               // node index, or -1 for the gateway
    std::int64_t a = 0, b = 0;     // kind-specific payload
};

class EventQueue {
public:
    TimeUs now() const { return now_; }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

    /// Fails loudly on past-time scheduling.
    void schedule(TimeUs fire_time, int kind, int entity = -1, std::int64_t a = 0,
                  std::int64_t b = 0) {
        if (fire_time < now_)
            throw SimError("schedule: fire_time " + std::to_string(fire_time) +
                           " us is before now " + std::to_string(now_) + " us");
        heap_.push(Event{fire_time, next_seq_++, kind, entity, a, b});
    }

    /// Pops the next event and advances the clock to it.
    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        now_ = e.fire_time;
        return e;
    }

private:
    struct Later {
        bool operator()(const Event& x, const Event& y) const {
            if (x.fire_time != y.fire_time) return x.fire_time > y.fire_time;
            return x.sequence > y.sequence;
        }
    };
    TimeUs now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

/// Streaming FNV-1a hash over `t_us,kind,entity,detail` records. The hash is
/// always maintained (it is the determinism fingerprint in reports); line
/// text is retained only when capture is enabled.
class EventTrace {
public:
    explicit EventTrace(bool keep_lines = false) : keep_lines_(keep_lines) {}

    void record(TimeUs t, std::string_view kind, std::string_view entity,
                std::string_view detail);

    std::uint64_t hash() const { return hash_; }
    const std::string& text() const { return text_; }
    bool keeps_lines() const { return keep_lines_; }

private:
    std::uint64_t hash_ = 1469598103934665603ULL;
    std::string text_;
    bool keep_lines_;
};

} // namespace ntnsim
