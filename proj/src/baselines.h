// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_BASELINES_H
#define ATPSIM_BASELINES_H

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "atp.h"
#include "fabric.h"
#include "flow.h"
#include "rng.h"
#include "sim.h"
#include "units.h"

namespace atpsim {

// Receiver-side per-message reassembly shared by the baseline endpoints: a
// message counts as delivered only when every one of its packets arrived.
class MessageTracker {
  public:
    MessageTracker(const FlowSpec& spec, uint32_t mtu);

    struct Result {
        bool fresh = false;             // first copy of this packet
        bool message_complete = false;  // this packet completed its message
    };
    Result on_data(uint32_t msg, uint32_t idx);

    uint32_t complete() const { return complete_; }
    bool msg_complete(uint32_t id) const { return msgs_[id].complete; }
    uint64_t delivered_payload() const { return delivered_payload_; }

  private:
    struct Recv {
        std::vector<bool> got;
        uint32_t count = 0;
        bool complete = false;
    };
    std::vector<Recv> msgs_;
    std::vector<uint32_t> sizes_;
    uint32_t complete_ = 0;
    uint64_t delivered_payload_ = 0;
};

// Open-loop datagram sender: every message is blasted at line rate the moment
// it arrives, nothing is acknowledged or retransmitted.  Packets leave back to
// back as the NIC frees up, so the wire schedule is the same as handing the
// whole burst to the NIC at once without holding an event per queued packet.
// The flow completes when the last packet leaves the sender NIC.
class UdpFlow : public FlowEndpoint {
  public:
    UdpFlow(Simulator& sim, Fabric& fabric, const FlowSpec& spec, uint32_t mtu = DEFAULT_MTU);

    void start() override;
    void on_message_arrival(uint32_t message_id) override;
    void deliver(const Packet& pkt) override;
    FlowRecord record() const override;
    void finalize(SimTime end_of_run) override;

  private:
    struct PendingMsg {
        uint32_t id = 0;
        uint32_t pkts = 0;
        uint32_t next = 0;
    };

    void wake_tx();
    void tx_fire();

    Simulator& sim_;
    Fabric& fabric_;
    FlowSpec spec_;
    uint32_t payload_full_;
    MessageTracker recv_;
    uint32_t next_seq_ = 0;
    uint32_t emitted_msgs_ = 0;
    SimTime last_wire_done_ = 0;
    std::deque<PendingMsg> txq_;
    bool tx_armed_ = false;
    FlowRecord rec_;
};

struct ReliableConfig {
    double cwnd_init = 10;    // packets
    double ecn_gain = 1.0 / 16;
    uint32_t mtu = DEFAULT_MTU;
};

// Window-based reliable transport in the accurate class: ECN-fraction-driven
// congestion window (per-window alpha <- (1-g) alpha + g F, marked window
// shrinks cwnd by alpha/2, clean window grows it by one packet), triple
// duplicate acks trigger retransmission plus a single halving per window, and
// an ack-silence timeout collapses the window to one packet.  With a send
// mask it doubles as the sender-drop baseline: masked messages are discarded
// before transmission and the survivors ride the same reliable machinery.
class ReliableFlow : public FlowEndpoint {
  public:
    ReliableFlow(Simulator& sim, Fabric& fabric, const FlowSpec& spec, const ReliableConfig& cfg,
                 std::vector<bool> drop_mask = {}, std::string label = "reliable");

    void start() override;
    void on_message_arrival(uint32_t message_id) override;
    void deliver(const Packet& pkt) override;
    FlowRecord record() const override;
    void finalize(SimTime end_of_run) override;

    double cwnd() const { return cwnd_; }
    double alpha() const { return alpha_; }
    const RetxQueue& retx() const { return retx_; }

  private:
    struct SendMsg {
        uint32_t total_pkts = 0;
        uint32_t next_unsent = 0;
        bool arrived = false;
        bool dropped = false;  // filtered at the sender, never transmitted
    };

    uint16_t payload_of(uint32_t msg, uint32_t idx) const;
    void try_send();
    void emit(uint32_t msg, uint32_t idx);
    void on_ack(const Packet& ack);
    void on_data(const Packet& pkt);
    void arm_timeout();
    void timeout_fire();

    Simulator& sim_;
    Fabric& fabric_;
    FlowSpec spec_;
    ReliableConfig cfg_;
    uint32_t payload_full_;
    SimTime timeout_;

    std::vector<SendMsg> msgs_;
    MessageTracker recv_;
    RetxQueue retx_;

    double cwnd_;
    double alpha_ = 0.0;
    uint64_t acks_window_ = 0;
    uint64_t marks_window_ = 0;
    uint32_t window_end_seq_ = 0;
    bool halved_this_window_ = false;

    uint32_t next_seq_ = 0;
    uint32_t cursor_ = 0;  // lowest message with unsent packets
    uint32_t survivors_ = 0;
    uint32_t survivors_complete_ = 0;
    bool started_ = false;
    bool done_ = false;
    bool timeout_armed_ = false;
    SimTime last_ack_ = 0;

    FlowRecord rec_;
};

// Sender-side message filter: each message is independently discarded with
// probability mlr before it ever reaches the transport.
std::vector<bool> sender_drop_mask(const FlowSpec& spec, double mlr, RngStream& rng);

}  // namespace atpsim

#endif
