// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "switchport.h"

namespace atpsim {

bool red_drop(int occupancy, const RedConfig& cfg, RngStream& rng) {
    if (occupancy < cfg.min_th)
        return false;
    if (occupancy >= cfg.max_th)
        return true;
    double p = static_cast<double>(occupancy - cfg.min_th + 1) / (cfg.max_th - cfg.min_th + 1);
    return rng.uniform() < p;
}

PortQueueSet::Enqueue PortQueueSet::enqueue(Packet pkt, RngStream& red_rng) {
    int q = classify(pkt.prio);
    if (q == 0) {
        if (shared_->accurate_occupancy >= shared_->accurate_capacity) {
            ++dropped;
            return Enqueue::Dropped;
        }
        if (static_cast<int>(queues_[0].size()) > cfg_->ecn_threshold)
            pkt.ce_marked = true;
        ++shared_->accurate_occupancy;
    } else {
        const RedConfig& red = q == 7 ? cfg_->backup_red : cfg_->approx_red;
        if (red_drop(static_cast<int>(queues_[q].size()), red, red_rng)) {
            ++dropped;
            return Enqueue::Dropped;
        }
    }
    queues_[q].push_back(pkt);
    ++enqueued;
    if (q >= 1 && q <= 7) {
        const RedConfig& red = q == 7 ? cfg_->backup_red : cfg_->approx_red;
        SIM_CHECK(static_cast<int>(queues_[q].size()) <= red.max_th,
                  "approximate queue occupancy exceeds max threshold");
    }
    return Enqueue::Queued;
}

int PortQueueSet::total_occupancy() const {
    int total = 0;
    for (const auto& q : queues_)
        total += static_cast<int>(q.size());
    return total;
}

bool PortQueueSet::class_nonempty(int cls) const {
    if (cls == 0)
        return !queues_[0].empty();
    return approx_head() >= 0;
}

int PortQueueSet::approx_head() const {
    for (int q = 1; q <= 7; ++q)
        if (!queues_[q].empty())
            return q;
    return -1;
}

uint32_t PortQueueSet::head_wire_bytes(int cls) const {
    int q = cls == 0 ? 0 : approx_head();
    return queues_[q].front().wire_bytes();
}

Packet PortQueueSet::pop_class(int cls) {
    int q = cls == 0 ? 0 : approx_head();
    Packet pkt = queues_[q].front();
    queues_[q].pop_front();
    if (q == 0)
        --shared_->accurate_occupancy;
    ++dequeued;
    return pkt;
}

std::optional<Packet> PortQueueSet::wrr_dequeue() {
    if (empty()) {
        deficit_[0] = deficit_[1] = 0;
        fresh_visit_ = true;
        return std::nullopt;
    }
    for (int guard = 0; guard < 64; ++guard) {
        if (!class_nonempty(current_class_)) {
            // An empty class yields its round.
            deficit_[current_class_] = 0;
            current_class_ ^= 1;
            fresh_visit_ = true;
            continue;
        }
        if (fresh_visit_) {
            deficit_[current_class_] += cfg_->quantum_bytes;
            fresh_visit_ = false;
        }
        if (static_cast<int64_t>(head_wire_bytes(current_class_)) <= deficit_[current_class_]) {
            Packet pkt = pop_class(current_class_);
            deficit_[current_class_] -= pkt.wire_bytes();
            if (!class_nonempty(current_class_)) {
                deficit_[current_class_] = 0;
                current_class_ ^= 1;
                fresh_visit_ = true;
            }
            return pkt;
        }
        current_class_ ^= 1;
        fresh_visit_ = true;
    }
    throw SimError("wrr_dequeue failed to pick a packet (quantum too small for packet size)");
}

}  // namespace atpsim
