// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_FLOW_H
#define ATPSIM_FLOW_H

#include <cstdint>
#include <string>
#include <vector>

#include "packet.h"
#include "units.h"

namespace atpsim {

struct MessageSpec {
    uint32_t id;          // dense 0..n-1 within the flow, in arrival order
    uint32_t size_bytes;
    SimTime arrival;      // absolute
};

// One application send request: a batch of messages from src to dst.
struct FlowSpec {
    uint32_t flow_id = 0;
    NodeId src = -1;
    NodeId dst = -1;
    SimTime start = 0;  // first message arrival
    std::vector<MessageSpec> messages;

    uint64_t total_payload() const {
        uint64_t sum = 0;
        for (const MessageSpec& m : messages)
            sum += m.size_bytes;
        return sum;
    }
};

// Per-window rate-control sample, kept for loss-rate analysis.
struct WindowSample {
    uint64_t n_sent = 0;
    uint64_t n_rcv = 0;
    double loss = 0;
    double rate_after = 0;
};

struct FlowRecord {
    uint32_t flow_id = 0;
    std::string protocol;
    NodeId src = -1;
    NodeId dst = -1;
    uint32_t messages_total = 0;
    uint32_t messages_delivered = 0;  // complete messages at the receiver
    uint32_t messages_filtered = 0;   // sender-drop: dropped before transmission
    SimTime start = 0;
    SimTime end = 0;
    bool completed = false;
    uint64_t bytes_sent = 0;          // payload bytes emitted (new + retx + backup)
    uint64_t delivered_payload = 0;   // distinct payload bytes of complete messages
    std::vector<WindowSample> windows;

    SimTime jct() const { return end - start; }
    double measured_loss() const {
        return messages_total == 0
                   ? 0.0
                   : 1.0 - static_cast<double>(messages_delivered) / messages_total;
    }
    double goodput_bps() const {
        SimTime d = jct();
        return d <= 0 ? 0.0 : static_cast<double>(delivered_payload) * 8.0 * NS_PER_SEC / d;
    }
};

// Required complete messages for the flow-done condition (exact-rational ceil
// of (1-mlr)*total; the epsilon guards binary-fraction noise in mlr).
inline uint32_t messages_needed(uint32_t total, double mlr) {
    if (mlr <= 0.0)
        return total;
    double x = (1.0 - mlr) * total;
    auto n = static_cast<int64_t>(x);
    if (x - n > 1e-9)
        ++n;
    return static_cast<uint32_t>(n < 0 ? 0 : n);
}

// Loss-adjusted acknowledgment count: floor(N / (1 - mlr)), never overstating
// permission to stop.
inline uint64_t n_ack_value(uint64_t complete_msgs, double mlr) {
    if (mlr <= 0.0)
        return complete_msgs;
    return static_cast<uint64_t>(static_cast<double>(complete_msgs) / (1.0 - mlr));
}

// Endpoint pair of one flow; the experiment drives starts and message
// arrivals, the fabric hands over every packet addressed to this flow.
class FlowEndpoint {
  public:
    virtual ~FlowEndpoint() = default;
    virtual void start() = 0;
    virtual void on_message_arrival(uint32_t message_id) = 0;
    virtual void deliver(const Packet& pkt) = 0;
    virtual FlowRecord record() const = 0;
    // Stamp flows still running when the simulation horizon is reached.
    virtual void finalize(SimTime end_of_run) = 0;
};

}  // namespace atpsim

#endif
