// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_SWITCHPORT_H
#define ATPSIM_SWITCHPORT_H

#include <array>
#include <cstdint>
#include <deque>
#include <optional>

#include "packet.h"
#include "rng.h"
#include "units.h"

namespace atpsim {

// Early-drop thresholds for one approximate queue, applied to instantaneous
// occupancy: below min always enqueue, at/above max always drop, in between
// drop with probability (occ - min + 1) / (max - min + 1).
struct RedConfig {
    int min_th = 1;
    int max_th = 5;
};

// Returns true when the arriving packet must be dropped.
bool red_drop(int occupancy, const RedConfig& cfg, RngStream& rng);

struct SwitchConfig {
    RedConfig approx_red = {1, 5};      // queues 1..6
    RedConfig backup_red = {1, 1};      // queue 7: drop whenever occupied
    int quantum_bytes = 1500;           // WRR quantum per class per round
    int buffer_packets = 1000;          // shared buffer per switch
    int approx_reservation = 31;        // 6 x max_th + 1 backup slot
    int ecn_threshold = 65;             // CE-mark accurate arrivals above this
    int accurate_capacity() const { return buffer_packets - approx_reservation; }
};

// Accurate-queue occupancy shared by all ports of one switch (the buffer is
// per switch, the tiny approximate queues are per port).
struct SharedBuffer {
    int accurate_occupancy = 0;
    int accurate_capacity = 0;
};

// One egress port: queue 0 accurate (drop-tail against the shared buffer,
// ECN), queues 1..7 approximate (RED, strict priority among themselves),
// deficit round-robin with one quantum per class between the two.
class PortQueueSet {
  public:
    PortQueueSet(const SwitchConfig* cfg, SharedBuffer* shared)
        : cfg_(cfg), shared_(shared) {}

    enum class Enqueue { Queued, Dropped };

    Enqueue enqueue(Packet pkt, RngStream& red_rng);
    std::optional<Packet> wrr_dequeue();

    bool empty() const { return total_occupancy() == 0; }
    int occupancy(int q) const { return static_cast<int>(queues_[q].size()); }
    int total_occupancy() const;

    uint64_t enqueued = 0;
    uint64_t dequeued = 0;
    uint64_t dropped = 0;

  private:
    bool class_nonempty(int cls) const;
    int approx_head() const;  // lowest-index nonempty queue 1..7, or -1
    uint32_t head_wire_bytes(int cls) const;
    Packet pop_class(int cls);

    const SwitchConfig* cfg_;
    SharedBuffer* shared_;
    std::array<std::deque<Packet>, 8> queues_;
    int64_t deficit_[2] = {0, 0};
    int current_class_ = 0;
    bool fresh_visit_ = true;  // quantum not yet granted for this visit
};

}  // namespace atpsim

#endif
