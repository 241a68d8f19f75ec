// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "baselines.h"

#include <algorithm>
#include <cmath>

namespace atpsim {

MessageTracker::MessageTracker(const FlowSpec& spec, uint32_t mtu) {
    uint32_t payload_full = mtu_payload(mtu);
    msgs_.resize(spec.messages.size());
    sizes_.reserve(spec.messages.size());
    for (size_t i = 0; i < spec.messages.size(); ++i) {
        uint32_t pkts = (spec.messages[i].size_bytes + payload_full - 1) / payload_full;
        msgs_[i].got.assign(pkts, false);
        sizes_.push_back(spec.messages[i].size_bytes);
    }
}

MessageTracker::Result MessageTracker::on_data(uint32_t msg, uint32_t idx) {
    SIM_CHECK(msg < msgs_.size(), "data packet for an unknown message");
    Recv& r = msgs_[msg];
    SIM_CHECK(idx < r.got.size(), "data packet index out of range for its message");
    Result res;
    if (!r.got[idx]) {
        r.got[idx] = true;
        ++r.count;
        res.fresh = true;
        if (r.count == r.got.size()) {
            r.complete = true;
            ++complete_;
            delivered_payload_ += sizes_[msg];
            res.message_complete = true;
        }
    }
    return res;
}

UdpFlow::UdpFlow(Simulator& sim, Fabric& fabric, const FlowSpec& spec, uint32_t mtu)
    : sim_(sim), fabric_(fabric), spec_(spec), payload_full_(mtu_payload(mtu)),
      recv_(spec, mtu) {
    rec_.flow_id = spec.flow_id;
    rec_.protocol = "udp";
    rec_.src = spec.src;
    rec_.dst = spec.dst;
    rec_.messages_total = static_cast<uint32_t>(spec.messages.size());
    rec_.start = spec.start;
}

void UdpFlow::start() {
    if (spec_.messages.empty()) {
        rec_.completed = true;
        rec_.end = sim_.now();
    }
}

void UdpFlow::on_message_arrival(uint32_t message_id) {
    const MessageSpec& m = spec_.messages[message_id];
    uint32_t pkts = (m.size_bytes + payload_full_ - 1) / payload_full_;
    txq_.push_back(PendingMsg{message_id, pkts, 0});
    wake_tx();
}

void UdpFlow::wake_tx() {
    if (tx_armed_ || txq_.empty())
        return;
    tx_armed_ = true;
    SimTime at = std::max(sim_.now(), fabric_.host_tx_free(spec_.src));
    sim_.schedule(at, EventKind::Timer, sim_.detail("flow=%u datagram tx", spec_.flow_id),
                  [this] { tx_fire(); });
}

void UdpFlow::tx_fire() {
    tx_armed_ = false;
    if (txq_.empty())
        return;
    SimTime nic_free = fabric_.host_tx_free(spec_.src);
    if (nic_free > sim_.now()) {
        wake_tx();  // another flow grabbed the NIC; retry when it drains
        return;
    }
    PendingMsg& m = txq_.front();
    const MessageSpec& msg = spec_.messages[m.id];
    Packet pkt;
    pkt.kind = PacketKind::Data;
    pkt.prio = PriorityTag::approx(1);
    pkt.flow_id = spec_.flow_id;
    pkt.message_id = m.id;
    pkt.pkt_index = m.next;
    pkt.seq = next_seq_++;
    uint32_t sent = m.next * payload_full_;
    pkt.payload_bytes = static_cast<uint16_t>(std::min(payload_full_, msg.size_bytes - sent));
    pkt.src = spec_.src;
    pkt.dst = spec_.dst;
    rec_.bytes_sent += pkt.payload_bytes;
    last_wire_done_ = std::max(last_wire_done_, fabric_.send_from_host(pkt));
    if (++m.next == m.pkts) {
        txq_.pop_front();
        if (++emitted_msgs_ == spec_.messages.size()) {
            // Fire-and-forget: the job is over when the last bit clears the NIC.
            rec_.completed = true;
            rec_.end = last_wire_done_;
        }
    }
    wake_tx();
}

void UdpFlow::deliver(const Packet& pkt) {
    SIM_CHECK(pkt.kind == PacketKind::Data, "datagram endpoint received an ack");
    recv_.on_data(pkt.message_id, pkt.pkt_index);
    rec_.messages_delivered = recv_.complete();
    rec_.delivered_payload = recv_.delivered_payload();
}

FlowRecord UdpFlow::record() const { return rec_; }

void UdpFlow::finalize(SimTime end_of_run) {
    rec_.messages_delivered = recv_.complete();
    rec_.delivered_payload = recv_.delivered_payload();
    if (!rec_.completed)
        rec_.end = end_of_run;
}

ReliableFlow::ReliableFlow(Simulator& sim, Fabric& fabric, const FlowSpec& spec,
                           const ReliableConfig& cfg, std::vector<bool> drop_mask,
                           std::string label)
    : sim_(sim),
      fabric_(fabric),
      spec_(spec),
      cfg_(cfg),
      payload_full_(mtu_payload(cfg.mtu)),
      timeout_(10 * fabric.base_rtt()),
      recv_(spec, cfg.mtu),
      cwnd_(cfg.cwnd_init) {
    msgs_.resize(spec.messages.size());
    for (size_t i = 0; i < spec.messages.size(); ++i) {
        SIM_CHECK(spec.messages[i].id == i, "message ids must be dense and in arrival order");
        msgs_[i].total_pkts = (spec.messages[i].size_bytes + payload_full_ - 1) / payload_full_;
        if (i < drop_mask.size() && drop_mask[i]) {
            msgs_[i].dropped = true;
            ++rec_.messages_filtered;
        } else {
            ++survivors_;
        }
    }
    rec_.flow_id = spec.flow_id;
    rec_.protocol = std::move(label);
    rec_.src = spec.src;
    rec_.dst = spec.dst;
    rec_.messages_total = static_cast<uint32_t>(spec.messages.size());
    rec_.start = spec.start;
}

uint16_t ReliableFlow::payload_of(uint32_t msg, uint32_t idx) const {
    uint32_t size = spec_.messages[msg].size_bytes;
    uint32_t last = msgs_[msg].total_pkts - 1;
    if (idx < last)
        return static_cast<uint16_t>(payload_full_);
    return static_cast<uint16_t>(size - last * payload_full_);
}

void ReliableFlow::start() {
    started_ = true;
    last_ack_ = sim_.now();
    if (survivors_ == 0) {
        done_ = true;
        rec_.completed = true;
        rec_.end = sim_.now();
    }
}

void ReliableFlow::on_message_arrival(uint32_t message_id) {
    msgs_[message_id].arrived = true;
    if (!done_)
        try_send();
}

void ReliableFlow::try_send() {
    while (!done_) {
        size_t inflight = retx_.size() - retx_.lost_count();
        if (static_cast<double>(inflight) >= cwnd_)
            return;
        if (const RetxQueue::Entry* e = retx_.eligible()) {
            emit(e->msg, e->idx);
            continue;
        }
        // Messages arrive in id order; advance past finished or filtered ones.
        while (cursor_ < msgs_.size() &&
               (msgs_[cursor_].dropped || msgs_[cursor_].next_unsent >= msgs_[cursor_].total_pkts))
            ++cursor_;
        if (cursor_ >= msgs_.size() || !msgs_[cursor_].arrived)
            return;
        emit(cursor_, msgs_[cursor_].next_unsent++);
    }
}

void ReliableFlow::emit(uint32_t msg, uint32_t idx) {
    Packet pkt;
    pkt.kind = PacketKind::Data;
    pkt.prio = PriorityTag::accurate();
    pkt.flow_id = spec_.flow_id;
    pkt.message_id = msg;
    pkt.pkt_index = idx;
    pkt.seq = next_seq_++;
    pkt.payload_bytes = payload_of(msg, idx);
    pkt.src = spec_.src;
    pkt.dst = spec_.dst;
    rec_.bytes_sent += pkt.payload_bytes;
    retx_.on_emit(msg, idx, pkt.payload_bytes, pkt.seq);
    fabric_.send_from_host(pkt);
    arm_timeout();
}

void ReliableFlow::deliver(const Packet& pkt) {
    if (pkt.kind == PacketKind::Ack)
        on_ack(pkt);
    else
        on_data(pkt);
}

void ReliableFlow::on_data(const Packet& pkt) {
    MessageTracker::Result res = recv_.on_data(pkt.message_id, pkt.pkt_index);
    if (res.message_complete) {
        rec_.messages_delivered = recv_.complete();
        rec_.delivered_payload = recv_.delivered_payload();
        if (!msgs_[pkt.message_id].dropped && ++survivors_complete_ == survivors_ &&
            !rec_.completed) {
            rec_.completed = true;
            rec_.end = sim_.now();
        }
    }
    Packet ack;
    ack.kind = PacketKind::Ack;
    ack.prio = PriorityTag::accurate();
    ack.flow_id = spec_.flow_id;
    ack.message_id = pkt.message_id;
    ack.pkt_index = pkt.pkt_index;
    ack.seq = pkt.seq;
    ack.payload_bytes = pkt.payload_bytes;
    ack.echo_ce = pkt.ce_marked;
    ack.flow_done = survivors_complete_ >= survivors_;
    ack.src = spec_.dst;
    ack.dst = spec_.src;
    fabric_.send_from_host(ack);
}

void ReliableFlow::on_ack(const Packet& ack) {
    last_ack_ = sim_.now();
    retx_.on_ack(ack.message_id, ack.pkt_index);
    size_t lost_before = retx_.lost_count();
    retx_.count_dup(ack.seq);
    if (retx_.lost_count() > lost_before && !halved_this_window_) {
        cwnd_ = std::max(1.0, cwnd_ / 2.0);
        halved_this_window_ = true;
    }
    ++acks_window_;
    if (ack.echo_ce)
        ++marks_window_;
    if (ack.seq >= window_end_seq_) {
        // One congestion update per round trip, delimited by the highest
        // sequence outstanding when the previous update ran.
        double f = static_cast<double>(marks_window_) / static_cast<double>(acks_window_);
        alpha_ = (1.0 - cfg_.ecn_gain) * alpha_ + cfg_.ecn_gain * f;
        if (marks_window_ > 0)
            cwnd_ = std::max(1.0, cwnd_ * (1.0 - alpha_ / 2.0));
        else
            cwnd_ += 1.0;
        acks_window_ = 0;
        marks_window_ = 0;
        halved_this_window_ = false;
        window_end_seq_ = next_seq_;
    }
    if (ack.flow_done && !done_) {
        done_ = true;
        return;
    }
    if (!done_)
        try_send();
}

void ReliableFlow::arm_timeout() {
    if (timeout_armed_ || done_ || retx_.empty())
        return;
    timeout_armed_ = true;
    sim_.schedule(std::max(sim_.now(), last_ack_ + timeout_), EventKind::Timer,
                  sim_.detail("flow=%u rto", spec_.flow_id), [this] { timeout_fire(); });
}

void ReliableFlow::timeout_fire() {
    timeout_armed_ = false;
    if (done_ || retx_.empty())
        return;
    if (sim_.now() - last_ack_ >= timeout_) {
        retx_.mark_all_lost();
        cwnd_ = 1.0;
        last_ack_ = sim_.now();
        try_send();
    }
    arm_timeout();
}

FlowRecord ReliableFlow::record() const { return rec_; }

void ReliableFlow::finalize(SimTime end_of_run) {
    rec_.messages_delivered = recv_.complete();
    rec_.delivered_payload = recv_.delivered_payload();
    if (!rec_.completed)
        rec_.end = end_of_run;
}

std::vector<bool> sender_drop_mask(const FlowSpec& spec, double mlr, RngStream& rng) {
    std::vector<bool> mask(spec.messages.size(), false);
    if (mlr <= 0.0)
        return mask;
    for (size_t i = 0; i < mask.size(); ++i)
        mask[i] = rng.uniform() < mlr;
    return mask;
}

}  // namespace atpsim
