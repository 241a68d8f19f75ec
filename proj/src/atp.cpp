// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "atp.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace atpsim {

namespace {

// Nanoseconds between back-to-back packets at a pacing rate, saturated so a
// vanishingly small rate cannot overflow the clock type when cast.
SimTime pacing_gap_ns(uint32_t wire_bytes, double rate_bps) {
    double ns = std::ceil(wire_bytes * 8.0 * static_cast<double>(NS_PER_SEC) / rate_bps);
    constexpr double cap = static_cast<double>(std::numeric_limits<SimTime>::max() / 2);
    if (!(ns < cap))  // also catches NaN
        return std::numeric_limits<SimTime>::max() / 2;
    return static_cast<SimTime>(ns);
}

}  // namespace

const char* atp_mode_name(AtpMode m) {
    switch (m) {
        case AtpMode::Base: return "atp-base";
        case AtpMode::Rc: return "atp-rc";
        case AtpMode::Pri: return "atp-pri";
        case AtpMode::Full: return "atp-full";
    }
    return "?";
}

WindowSample RateController::window_update() {
    WindowSample sample;
    sample.n_sent = n_sent_;
    sample.n_rcv = n_rcv_;
    if (n_sent_ > 0) {
        double raw = (static_cast<double>(n_sent_) - static_cast<double>(n_rcv_)) / n_sent_;
        l_ = std::clamp(raw, 0.0, 1.0);
    } else {
        l_ = 0.0;  // idle window carries no loss evidence
    }
    if (n_sent_ > 0 && n_rcv_ == 0)
        rate_ *= 1.0 - beta_;
    else if (l_ <= tlr_)
        rate_ = (1.0 - m_) * rate_ + m_ * r_max_;
    else
        rate_ *= 1.0 - l_ / 2.0;
    rate_ = std::clamp(rate_, r_min_, r_max_);
    sample.loss = l_;
    sample.rate_after = rate_;
    n_sent_ = 0;
    n_rcv_ = 0;
    return sample;
}

int assign_priority(double rate_bps, const std::vector<double>& alphas_bps) {
    SIM_CHECK(alphas_bps.size() <= 5, "priority ladder longer than the 6 available levels");
    int level = 1;
    for (double alpha : alphas_bps)
        if (rate_bps >= alpha)
            ++level;
        else
            break;
    return level;
}

void MsgScheduler::add(MsgState& m) {
    SIM_CHECK(m.bin < 0, "message added to the scheduler twice");
    m.bin = bin_of(m.remaining_pkts());
    table_[m.bin].insert(m.id);
    ++pending_;
}

void MsgScheduler::remove(MsgState& m) {
    if (m.bin < 0)
        return;
    table_[m.bin].erase(m.id);
    m.bin = -1;
    --pending_;
}

void MsgScheduler::on_ack(MsgState& m) {
    if (m.bin < 0)
        return;
    int nb = bin_of(m.remaining_pkts());
    if (nb != m.bin) {
        table_[m.bin].erase(m.id);
        table_[nb].insert(m.id);
        m.bin = nb;
    }
}

MsgState* MsgScheduler::select(std::vector<MsgState>& msgs) {
    if (pending_ == 0)
        return nullptr;
    for (auto& bin : table_)
        if (!bin.empty())
            return &msgs[*bin.begin()];
    return nullptr;
}

int MsgScheduler::bin_of(uint32_t remaining) const {
    if (kind_ == MsgSched::Fifo)
        return 0;
    SIM_CHECK(remaining >= 1, "scheduler asked to bin a finished message");
    int bin = linear_ ? static_cast<int>(remaining) - 1
                      : static_cast<int>(std::bit_width(remaining - 1));
    return std::min(bin, bins_ - 1);
}

void RetxQueue::on_emit(uint32_t msg, uint32_t idx, uint16_t payload, uint32_t seq) {
    uint64_t k = key(msg, idx);
    auto it = index_.find(k);
    if (it != index_.end()) {
        // Retransmission: move to the tail with a fresh sequence number.
        if (backup_cursor_ == it->second)
            ++backup_cursor_;
        if (it->second->lost)
            --lost_;
        list_.erase(it->second);
        index_.erase(it);
    }
    list_.push_back(Entry{msg, idx, payload, seq, 0, false});
    index_[k] = std::prev(list_.end());
}

bool RetxQueue::on_ack(uint32_t msg, uint32_t idx) {
    auto it = index_.find(key(msg, idx));
    if (it == index_.end())
        return false;
    if (backup_cursor_ == it->second)
        ++backup_cursor_;
    if (it->second->lost)
        --lost_;
    list_.erase(it->second);
    index_.erase(it);
    return true;
}

void RetxQueue::count_dup(uint32_t acked_seq) {
    // The list is ordered by last emission seq, so everything sent before the
    // acked packet sits in a prefix.
    for (Entry& e : list_) {
        if (e.last_seq >= acked_seq)
            break;
        if (!e.lost && ++e.dup_acks >= 3) {
            e.lost = true;
            ++lost_;
        }
    }
}

void RetxQueue::mark_all_lost() {
    for (Entry& e : list_)
        if (!e.lost) {
            e.lost = true;
            ++lost_;
        }
}

const RetxQueue::Entry* RetxQueue::eligible() const {
    if (lost_ == 0)
        return nullptr;
    for (const Entry& e : list_)
        if (e.lost)
            return &e;
    return nullptr;
}

const RetxQueue::Entry* RetxQueue::backup_next() {
    if (list_.empty())
        return nullptr;
    if (backup_cursor_ == list_.end())
        backup_cursor_ = list_.begin();
    const Entry* e = &*backup_cursor_;
    ++backup_cursor_;
    return e;
}

AtpReceiver::AtpReceiver(const FlowSpec& spec, double mlr, uint32_t mtu)
    : mlr_(mlr), needed_(messages_needed(static_cast<uint32_t>(spec.messages.size()), mlr)) {
    uint32_t payload_full = mtu_payload(mtu);
    msgs_.resize(spec.messages.size());
    sizes_.reserve(spec.messages.size());
    for (size_t i = 0; i < spec.messages.size(); ++i) {
        uint32_t pkts = (spec.messages[i].size_bytes + payload_full - 1) / payload_full;
        msgs_[i].got.assign(pkts, false);
        sizes_.push_back(spec.messages[i].size_bytes);
    }
}

AtpReceiver::DataResult AtpReceiver::on_data(uint32_t msg, uint32_t idx) {
    SIM_CHECK(msg < msgs_.size(), "data packet for an unknown message");
    Recv& r = msgs_[msg];
    SIM_CHECK(idx < r.got.size(), "data packet index out of range for its message");
    DataResult res;
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
    res.n_ack = n_ack_value(complete_, mlr_);
    SIM_CHECK(res.n_ack >= last_n_ack_, "n_ack must be nondecreasing");
    last_n_ack_ = res.n_ack;
    res.flow_done = done();
    return res;
}

AtpFlow::AtpFlow(Simulator& sim, Fabric& fabric, const FlowSpec& spec, const AtpConfig& cfg,
                 Bps line_rate)
    : sim_(sim),
      fabric_(fabric),
      spec_(spec),
      cfg_(cfg),
      line_rate_(line_rate),
      payload_full_(mtu_payload(cfg.mtu)),
      window_(cfg.window_ns > 0 ? cfg.window_ns : 4 * fabric.base_rtt()),
      timeout_(10 * fabric.base_rtt()),
      sched_(cfg.effective_scheduler(), cfg.mrdf_bins, cfg.mrdf_linear_bins),
      rc_(cfg.initial_rate_bps > 0 ? cfg.initial_rate_bps : static_cast<double>(line_rate),
          static_cast<double>(line_rate),
          // Floor: one full packet per window.
          static_cast<double>(data_wire_bits(payload_full_)) * NS_PER_SEC / window_,
          cfg.tlr, cfg.gain_m, cfg.beta),
      recv_(spec, cfg.mlr, cfg.mtu) {
    msgs_.resize(spec.messages.size());
    for (size_t i = 0; i < spec.messages.size(); ++i) {
        MsgState& m = msgs_[i];
        m.id = spec.messages[i].id;
        SIM_CHECK(m.id == i, "message ids must be dense and in arrival order");
        m.size_bytes = spec.messages[i].size_bytes;
        m.total_pkts = packets_of(m.size_bytes, payload_full_);
        m.acked.assign(m.total_pkts, false);
    }
    alphas_ = cfg.alphas_bps;
    if (alphas_.empty()) {
        // Default ladder: 2^k packets per window, k = 1..5.
        double pkt_per_window_bps =
            static_cast<double>(data_wire_bits(payload_full_)) * NS_PER_SEC / window_;
        for (int k = 1; k <= 5; ++k)
            alphas_.push_back(pkt_per_window_bps * (1 << k));
    }
    rec_.flow_id = spec.flow_id;
    rec_.protocol = atp_mode_name(cfg.mode);
    rec_.src = spec.src;
    rec_.dst = spec.dst;
    rec_.messages_total = static_cast<uint32_t>(spec.messages.size());
    rec_.start = spec.start;
}

uint16_t AtpFlow::payload_of(const MsgState& m, uint32_t idx) const {
    uint32_t last = m.total_pkts - 1;
    if (idx < last)
        return static_cast<uint16_t>(payload_full_);
    return static_cast<uint16_t>(m.size_bytes - last * payload_full_);
}

void AtpFlow::start() {
    started_ = true;
    last_ack_ = sim_.now();
    if (cfg_.mode != AtpMode::Base)
        prio_level_ = assign_priority(rc_.rate(), alphas_);
    if (msgs_.empty()) {
        done_ = true;
        rec_.completed = true;
        rec_.end = sim_.now();
        return;
    }
    if (cfg_.mode != AtpMode::Base)
        sim_.schedule(sim_.now() + window_, EventKind::WindowTick,
                      sim_.detail("flow=%u", spec_.flow_id), [this] { window_tick(); });
    wake_pacer();
}

void AtpFlow::on_message_arrival(uint32_t message_id) {
    MsgState& m = msgs_[message_id];
    m.arrived = true;
    if (!done_ && !m.fully_sent())
        sched_.add(m);
    wake_pacer();
}

bool AtpFlow::stop_new_data() const {
    return done_ || highest_nack_ > msgs_.size();
}

uint32_t AtpFlow::emit_packet(MsgState& m, uint32_t idx, bool backup) {
    Packet pkt;
    pkt.kind = PacketKind::Data;
    pkt.flow_id = spec_.flow_id;
    pkt.message_id = m.id;
    pkt.pkt_index = idx;
    pkt.seq = next_seq_++;
    pkt.payload_bytes = payload_of(m, idx);
    pkt.src = spec_.src;
    pkt.dst = spec_.dst;
    pkt.from_backup = backup;
    if (backup)
        pkt.prio = PriorityTag::backup();
    else if (cfg_.mode == AtpMode::Pri || cfg_.mode == AtpMode::Full)
        pkt.prio = PriorityTag::approx(static_cast<uint8_t>(prio_level_));
    else
        pkt.prio = PriorityTag::approx(1);
    rec_.bytes_sent += pkt.payload_bytes;
    if (!backup) {
        rc_.on_sent();
        retx_.on_emit(m.id, idx, pkt.payload_bytes, pkt.seq);
    }
    fabric_.send_from_host(pkt);
    arm_timeout();
    return pkt.wire_bytes();
}

uint32_t AtpFlow::emit_primary() {
    if (!stop_new_data()) {
        if (MsgState* m = sched_.select(msgs_)) {
            uint32_t idx = m->next_unsent++;
            uint32_t wire = emit_packet(*m, idx, false);
            if (m->fully_sent()) {
                sched_.remove(*m);
                ++msgs_fully_sent_;
            }
            return wire;
        }
    }
    // No new data available (or quota reached): fall back to retransmission
    // while the acknowledgment count trails the fully-sent message count.
    if (!done_ && highest_nack_ < msgs_fully_sent_) {
        if (const RetxQueue::Entry* e = retx_.eligible()) {
            MsgState& m = msgs_[e->msg];
            return emit_packet(m, e->idx, false);  // re-appends at the tail
        }
    }
    return 0;
}

void AtpFlow::wake_pacer() {
    if (pacer_armed_ || done_ || !started_)
        return;
    pacer_armed_ = true;
    SimTime at = std::max(sim_.now(), pacer_next_);
    sim_.schedule(at, EventKind::Timer, sim_.detail("flow=%u pacer", spec_.flow_id),
                  [this] { pacer_fire(); });
}

void AtpFlow::pacer_fire() {
    pacer_armed_ = false;
    if (done_)
        return;
    SimTime nic_free = fabric_.host_tx_free(spec_.src);
    if (nic_free > sim_.now()) {
        // The NIC is still serializing earlier traffic (other flows on this
        // host included); emitting now would stack reservations without
        // bound, so yield until it drains.
        pacer_next_ = std::max(pacer_next_, nic_free);
        wake_pacer();
        return;
    }
    uint32_t wire = emit_primary();
    if (wire == 0)
        return;  // idle; re-woken by arrivals, acks or the timeout scan
    pacer_next_ = sim_.now() + pacing_gap_ns(wire, rc_.rate());
    wake_pacer();
}

double AtpFlow::backup_rate() const {
    // Residual line capacity for the backup sub-flow.  A residual under the
    // controller's own floor (one packet per window) is not usable spare rate:
    // treating it as positive would pace one packet per aeon and, worse, a
    // rate a few ulps under the line rate yields a gap that overflows the
    // clock.  The sub-flow stays dormant until a window update frees capacity.
    double r = static_cast<double>(line_rate_) - rc_.rate();
    return r >= rc_.min_rate() ? r : 0.0;
}

void AtpFlow::wake_backup() {
    if (backup_armed_ || done_ || cfg_.mode != AtpMode::Full)
        return;
    if (backup_rate() <= 0)
        return;
    backup_armed_ = true;
    SimTime at = std::max(sim_.now(), backup_next_);
    sim_.schedule(at, EventKind::Timer, sim_.detail("flow=%u backup", spec_.flow_id),
                  [this] { backup_fire(); });
}

void AtpFlow::backup_fire() {
    backup_armed_ = false;
    if (done_)
        return;
    double rate = backup_rate();
    if (rate <= 0)
        return;  // re-woken by the next window update
    SimTime nic_free = fabric_.host_tx_free(spec_.src);
    if (nic_free > sim_.now()) {
        backup_next_ = std::max(backup_next_, nic_free);
        wake_backup();
        return;
    }
    const RetxQueue::Entry* e = retx_.backup_next();
    if (!e)
        return;  // nothing outstanding; re-woken by the next primary emission
    uint32_t wire = emit_packet(msgs_[e->msg], e->idx, true);
    backup_next_ = sim_.now() + pacing_gap_ns(wire, rate);
    wake_backup();
}

void AtpFlow::window_tick() {
    if (done_)
        return;
    rec_.windows.push_back(rc_.window_update());
    if (cfg_.mode == AtpMode::Pri || cfg_.mode == AtpMode::Full)
        prio_level_ = assign_priority(rc_.rate(), alphas_);
    if (cfg_.mode == AtpMode::Full) {
        wake_backup();
        wake_pacer();  // rate may have recovered enough to resume
    } else {
        wake_pacer();
    }
    sim_.schedule(sim_.now() + window_, EventKind::WindowTick,
                  sim_.detail("flow=%u", spec_.flow_id), [this] { window_tick(); });
}

void AtpFlow::arm_timeout() {
    if (timeout_armed_ || done_ || retx_.empty())
        return;
    timeout_armed_ = true;
    sim_.schedule(std::max(sim_.now(), last_ack_ + timeout_), EventKind::Timer,
                  sim_.detail("flow=%u timeout", spec_.flow_id), [this] { timeout_fire(); });
}

void AtpFlow::timeout_fire() {
    timeout_armed_ = false;
    if (done_ || retx_.empty())
        return;  // re-armed by the next emission
    if (sim_.now() - last_ack_ >= timeout_) {
        // Ack silence: consider everything outstanding lost.
        retx_.mark_all_lost();
        wake_pacer();
        last_ack_ = sim_.now();  // pace the next scan one timeout later
    }
    arm_timeout();
}

void AtpFlow::deliver(const Packet& pkt) {
    if (pkt.kind == PacketKind::Ack)
        on_ack(pkt);
    else
        on_data(pkt);
}

void AtpFlow::on_data(const Packet& pkt) {
    AtpReceiver::DataResult res = recv_.on_data(pkt.message_id, pkt.pkt_index);
    if (res.message_complete) {
        rec_.messages_delivered = recv_.complete_msgs();
        rec_.delivered_payload = recv_.delivered_payload();
        if (res.flow_done && !rec_.completed) {
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
    ack.from_backup = pkt.from_backup;
    ack.n_ack = res.n_ack;
    ack.flow_done = res.flow_done;
    ack.src = spec_.dst;
    ack.dst = spec_.src;
    fabric_.send_from_host(ack);
}

void AtpFlow::on_ack(const Packet& ack) {
    last_ack_ = sim_.now();
    highest_nack_ = std::max(highest_nack_, ack.n_ack);
    bool removed = retx_.on_ack(ack.message_id, ack.pkt_index);
    retx_.count_dup(ack.seq);
    if (removed) {
        if (!ack.from_backup)
            rc_.on_rcv();
        MsgState& m = msgs_[ack.message_id];
        if (!m.acked[ack.pkt_index]) {
            m.acked[ack.pkt_index] = true;
            ++m.acked_pkts;
            sched_.on_ack(m);
        }
    }
    if (ack.flow_done && !done_) {
        // The receiver holds enough messages: cease all transmission.
        done_ = true;
        return;
    }
    if (!done_)
        wake_pacer();  // a loss marking may have made the retx head eligible
}

FlowRecord AtpFlow::record() const { return rec_; }

void AtpFlow::finalize(SimTime end_of_run) {
    rec_.messages_delivered = recv_.complete_msgs();
    rec_.delivered_payload = recv_.delivered_payload();
    if (!rec_.completed)
        rec_.end = end_of_run;
}

}  // namespace atpsim
