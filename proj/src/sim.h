// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_SIM_H
#define ATPSIM_SIM_H

#include <algorithm>
#include <cstdarg>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "units.h"

namespace atpsim {

enum class EventKind : uint8_t {
    PacketArrival,
    TransmitComplete,
    WindowTick,
    AppMessageArrival,
    Timer,
};

const char* event_kind_name(EventKind k);

struct RunSummary {
    uint64_t events_processed = 0;
    uint64_t peak_outstanding = 0;  // high-water mark of scheduled-not-yet-fired events
    SimTime clock = 0;
};

// Single-threaded event engine.  Events fire in (fire_at, seq) order where seq
// is the global schedule counter, so ties resolve by scheduling order and a
// run is a pure function of (config, seed).
class Simulator {
  public:
    uint64_t schedule(SimTime at, EventKind kind, std::function<void()> fn) {
        return schedule(at, kind, std::string(), std::move(fn));
    }

    uint64_t schedule(SimTime at, EventKind kind, std::string detail_for_trace,
                      std::function<void()> fn) {
        if (at < clock_)
            throw SimError("event scheduled in the past (fire_at < clock)");
        Ev ev;
        ev.at = at;
        ev.seq = next_seq_++;
        ev.kind = kind;
        ev.detail = std::move(detail_for_trace);
        ev.fn = std::move(fn);
        heap_.push_back(std::move(ev));
        std::push_heap(heap_.begin(), heap_.end(), later);
        peak_outstanding_ = std::max<uint64_t>(peak_outstanding_, heap_.size());
        return heap_.back().seq;
    }

    // Process every event with fire_at <= end.  The clock lands on the last
    // processed event (unchanged if none fire).
    RunSummary run_until(SimTime end);

    SimTime now() const { return clock_; }
    size_t pending() const { return heap_.size(); }
    uint64_t peak_outstanding() const { return peak_outstanding_; }

    bool tracing() const { return trace_ != nullptr; }
    void set_trace_sink(std::ostream* sink) { trace_ = sink; }

    // printf-style detail string, built only when tracing is on so the hot
    // path stays allocation-free.
    std::string detail(const char* fmt, ...) const;

  private:
    struct Ev {
        SimTime at;
        uint64_t seq;
        EventKind kind;
        std::string detail;
        std::function<void()> fn;
    };

    // std::push_heap builds a max-heap; invert to pop the earliest (at, seq).
    static bool later(const Ev& a, const Ev& b) {
        return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }

    std::vector<Ev> heap_;
    uint64_t next_seq_ = 0;
    uint64_t peak_outstanding_ = 0;
    SimTime clock_ = 0;
    std::ostream* trace_ = nullptr;
};

// FNV-1a over a byte stream; used to compare traces across runs.
uint64_t fnv1a64(const std::string& s);

}  // namespace atpsim

#endif
