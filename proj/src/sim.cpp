// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "sim.h"

#include <cstdio>

namespace atpsim {

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::PacketArrival: return "PacketArrival";
        case EventKind::TransmitComplete: return "TransmitComplete";
        case EventKind::WindowTick: return "WindowTick";
        case EventKind::AppMessageArrival: return "AppMessageArrival";
        case EventKind::Timer: return "Timer";
    }
    return "?";
}

RunSummary Simulator::run_until(SimTime end) {
    RunSummary summary;
    summary.clock = clock_;
    while (!heap_.empty() && heap_.front().at <= end) {
        std::pop_heap(heap_.begin(), heap_.end(), later);
        Ev ev = std::move(heap_.back());
        heap_.pop_back();
        SIM_CHECK(ev.at >= clock_, "event queue produced a time in the past");
        clock_ = ev.at;
        if (trace_)
            *trace_ << ev.at << '\t' << ev.seq << '\t' << event_kind_name(ev.kind) << '\t'
                    << ev.detail << '\n';
        ev.fn();
        ++summary.events_processed;
        summary.clock = clock_;
    }
    summary.peak_outstanding = peak_outstanding_;
    return summary;
}

std::string Simulator::detail(const char* fmt, ...) const {
    if (!trace_)
        return {};
    char buf[192];
    va_list ap;
    va_start(ap, fmt);
    vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace atpsim
