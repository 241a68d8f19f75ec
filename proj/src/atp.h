// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_ATP_H
#define ATPSIM_ATP_H

#include <cstdint>
#include <list>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "fabric.h"
#include "flow.h"
#include "sim.h"
#include "units.h"

namespace atpsim {

// Feature ladder: Base = fixed-rate + retransmission-to-quota; Rc adds
// windowed loss-based rate control; Pri adds rate-derived priority tagging;
// Full adds the backup sub-flow and minimal-remaining-data-first scheduling.
enum class AtpMode { Base, Rc, Pri, Full };
enum class MsgSched { Mrdf, Fifo };

const char* atp_mode_name(AtpMode m);

struct AtpConfig {
    AtpMode mode = AtpMode::Full;
    std::optional<MsgSched> scheduler;  // default: Mrdf for Full, Fifo otherwise
    double mlr = 0.0;                   // tolerated message loss ratio
    double tlr = 0.1;                   // tolerated per-window packet loss
    double gain_m = 0.125;              // recovery gain toward R_max
    double beta = 0.1;                  // silent-window decrease factor
    SimTime window_ns = 0;              // 0 = 4 x base RTT
    int mrdf_bins = 8;
    bool mrdf_linear_bins = false;      // bin width 1 packet instead of powers of two
    uint32_t mtu = DEFAULT_MTU;
    double initial_rate_bps = 0;        // 0 = line rate
    std::vector<double> alphas_bps;     // ascending; empty = 2^k packets/window ladder

    MsgSched effective_scheduler() const {
        return scheduler ? *scheduler : (mode == AtpMode::Full ? MsgSched::Mrdf : MsgSched::Fifo);
    }
};

// Windowed loss-driven rate controller.  Each window of T_w measures
// l = (n_sent - n_rcv) / n_sent and applies one of:
//   silent window (sent but nothing confirmed):  R <- R * (1 - beta)
//   l <= tlr:                                    R <- (1 - m) * R + m * R_max
//   l >  tlr:                                    R <- R * (1 - l/2)
// then clamps R into [R_min_floor, R_max].
class RateController {
  public:
    RateController(double r_init, double r_max, double r_min_floor, double tlr, double gain_m,
                   double beta)
        : rate_(r_init), r_max_(r_max), r_min_(r_min_floor), tlr_(tlr), m_(gain_m), beta_(beta) {}

    void on_sent() { ++n_sent_; }
    void on_rcv() { ++n_rcv_; }

    WindowSample window_update();

    double rate() const { return rate_; }
    double min_rate() const { return r_min_; }
    double last_loss() const { return l_; }
    uint64_t n_sent() const { return n_sent_; }
    uint64_t n_rcv() const { return n_rcv_; }

  private:
    double rate_;
    double r_max_;
    double r_min_;
    double tlr_;
    double m_;
    double beta_;
    double l_ = 0.0;
    uint64_t n_sent_ = 0;
    uint64_t n_rcv_ = 0;
};

// Priority level 1..6 for a sending rate: level m when alpha_{m-1} <= R <
// alpha_m with alpha_0 = 0 and alpha_K = infinity (boundaries are
// lower-inclusive for the level above).  Level 1 = highest priority, carried
// by the lowest-rate flows.
int assign_priority(double rate_bps, const std::vector<double>& alphas_bps);

// Sender-side view of one message.
struct MsgState {
    uint32_t id = 0;
    uint32_t size_bytes = 0;
    uint32_t total_pkts = 0;
    uint32_t next_unsent = 0;
    uint32_t acked_pkts = 0;
    std::vector<bool> acked;
    bool arrived = false;
    int bin = -1;  // scheduler bin, -1 when not pending

    uint32_t remaining_pkts() const { return total_pkts - acked_pkts; }
    bool fully_sent() const { return next_unsent >= total_pkts; }
};

// Chooses which pending message supplies the next new packet.  Mrdf keeps
// power-of-two bins over remaining size (packets); messages drop to a lower
// bin as acks shrink them, ties resolve by arrival (= id) order within a bin.
// Fifo is the degenerate single-bin variant.
class MsgScheduler {
  public:
    MsgScheduler(MsgSched kind, int bins, bool linear)
        : kind_(kind), linear_(linear), bins_(kind == MsgSched::Fifo ? 1 : bins) {}

    void add(MsgState& m);
    void remove(MsgState& m);
    void on_ack(MsgState& m);  // re-bin after remaining shrank
    MsgState* select(std::vector<MsgState>& msgs);
    bool empty() const { return pending_ == 0; }

  private:
    int bin_of(uint32_t remaining_pkts) const;

    MsgSched kind_;
    bool linear_;
    int bins_;
    std::vector<std::set<uint32_t>> table_{static_cast<size_t>(bins_)};
    size_t pending_ = 0;
};

// FIFO retransmission queue in most-recent-send order.  Every primary
// emission (re-)appends its descriptor at the tail; an ack removes it; an ack
// for a later-sent packet bumps dup counts of everything still ahead of it,
// and the third such ack marks the packet lost (eligible for retransmission).
class RetxQueue {
  public:
    struct Entry {
        uint32_t msg;
        uint32_t idx;
        uint16_t payload;
        uint32_t last_seq;
        uint8_t dup_acks = 0;
        bool lost = false;
    };

    void on_emit(uint32_t msg, uint32_t idx, uint16_t payload, uint32_t seq);
    bool on_ack(uint32_t msg, uint32_t idx);
    void count_dup(uint32_t acked_seq);
    void mark_all_lost();  // ack-silence timeout scan

    // First lost entry in FIFO order, nullptr when none.
    const Entry* eligible() const;
    // Next unacked entry for the backup sub-flow, cycling.
    const Entry* backup_next();

    bool empty() const { return list_.empty(); }
    size_t size() const { return list_.size(); }
    size_t lost_count() const { return lost_; }
    const std::list<Entry>& entries() const { return list_; }

  private:
    static uint64_t key(uint32_t msg, uint32_t idx) {
        return (static_cast<uint64_t>(msg) << 32) | idx;
    }

    std::list<Entry> list_;
    std::unordered_map<uint64_t, std::list<Entry>::iterator> index_;
    std::list<Entry>::iterator backup_cursor_ = list_.end();
    size_t lost_ = 0;
};

// Receiver half: counts complete messages (a message counts only when every
// packet arrived) and produces the loss-adjusted n_ack plus the flow-done
// flag for each ack.
class AtpReceiver {
  public:
    AtpReceiver(const FlowSpec& spec, double mlr, uint32_t mtu);

    struct DataResult {
        bool fresh = false;          // first copy of this packet
        bool message_complete = false;  // this packet completed its message
        uint64_t n_ack = 0;
        bool flow_done = false;
    };
    DataResult on_data(uint32_t msg, uint32_t idx);

    uint32_t complete_msgs() const { return complete_; }
    uint32_t needed() const { return needed_; }
    bool done() const { return complete_ >= needed_; }
    uint64_t delivered_payload() const { return delivered_payload_; }

  private:
    struct Recv {
        std::vector<bool> got;
        uint32_t count = 0;
        bool complete = false;
    };
    std::vector<Recv> msgs_;
    std::vector<uint32_t> sizes_;
    double mlr_;
    uint32_t needed_;
    uint32_t complete_ = 0;
    uint64_t delivered_payload_ = 0;
    uint64_t last_n_ack_ = 0;
};

// Full sender+receiver endpoint wired to the fabric.
class AtpFlow : public FlowEndpoint {
  public:
    AtpFlow(Simulator& sim, Fabric& fabric, const FlowSpec& spec, const AtpConfig& cfg,
            Bps line_rate);

    void start() override;
    void on_message_arrival(uint32_t message_id) override;
    void deliver(const Packet& pkt) override;
    FlowRecord record() const override;
    void finalize(SimTime end_of_run) override;

    double current_rate() const { return rc_.rate(); }
    int priority_level() const { return prio_level_; }
    const RetxQueue& retx() const { return retx_; }

  private:
    static uint32_t packets_of(uint32_t size_bytes, uint32_t payload_full) {
        return (size_bytes + payload_full - 1) / payload_full;
    }
    uint16_t payload_of(const MsgState& m, uint32_t idx) const;

    bool stop_new_data() const;
    uint32_t emit_primary();  // wire bytes emitted, 0 when idle
    uint32_t emit_packet(MsgState& m, uint32_t idx, bool backup);
    void on_ack(const Packet& ack);
    void on_data(const Packet& pkt);

    void wake_pacer();
    void pacer_fire();
    double backup_rate() const;
    void wake_backup();
    void backup_fire();
    void window_tick();
    void arm_timeout();
    void timeout_fire();

    Simulator& sim_;
    Fabric& fabric_;
    FlowSpec spec_;
    AtpConfig cfg_;
    Bps line_rate_;
    uint32_t payload_full_;
    SimTime window_;
    SimTime timeout_;
    std::vector<double> alphas_;

    std::vector<MsgState> msgs_;
    MsgScheduler sched_;
    RetxQueue retx_;
    RateController rc_;
    AtpReceiver recv_;

    uint32_t next_seq_ = 0;
    uint32_t msgs_fully_sent_ = 0;
    uint64_t highest_nack_ = 0;
    int prio_level_ = 1;
    bool started_ = false;
    bool done_ = false;

    bool pacer_armed_ = false;
    SimTime pacer_next_ = 0;
    bool backup_armed_ = false;
    SimTime backup_next_ = 0;
    bool timeout_armed_ = false;
    SimTime last_ack_ = 0;

    FlowRecord rec_;
};

}  // namespace atpsim

#endif
