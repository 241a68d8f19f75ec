// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_FABRIC_H
#define ATPSIM_FABRIC_H

#include <cstdint>
#include <memory>
#include <vector>

#include "packet.h"
#include "rng.h"
#include "sim.h"
#include "switchport.h"
#include "topology.h"

namespace atpsim {

// Endpoint side of the fabric: every packet that reaches its destination host
// is handed here (after the receiver-side host delay).
class EndpointHub {
  public:
    virtual ~EndpointHub() = default;
    virtual void deliver(const Packet& pkt, SimTime now) = 0;
};

struct FabricCounters {
    uint64_t emitted_data = 0;
    uint64_t emitted_acks = 0;
    uint64_t delivered_data = 0;
    uint64_t delivered_acks = 0;
    uint64_t dropped = 0;
    uint64_t in_transit = 0;  // serialized or propagating, arrival scheduled

    uint64_t emitted() const { return emitted_data + emitted_acks; }
    uint64_t delivered() const { return delivered_data + delivered_acks; }
};

// Moves packets between hosts: host NIC serialization on the uplink, per-port
// queueing and WRR service at switches, ECMP next-hop choice for accurate
// traffic and per-packet spray for approximate traffic.
class Fabric {
  public:
    Fabric(Simulator& sim, TopologyGraph& topo, const SwitchConfig& cfg, RngStream& spray_rng,
           RngStream& red_rng, EndpointHub& hub);

    // Emit a packet from its src host.  The sender-side host delay is charged
    // as latency; the NIC (host uplink) serializes emissions back to back.
    // Returns the time the last bit leaves the NIC.
    SimTime send_from_host(const Packet& pkt);

    // Time the host's NIC finishes serializing everything already handed to
    // it (now or earlier when idle).  Senders must defer paced emissions past
    // this point instead of stacking reservations arbitrarily far ahead.
    SimTime host_tx_free(NodeId host) const;

    const FabricCounters& counters() const { return counters_; }
    const RouteTable& routes() const { return routes_; }
    SimTime base_rtt() const { return base_rtt_; }

    // Packets still sitting in switch queues.
    uint64_t queued_packets() const;
    // Packets accepted onto the given switch's port toward link_id.
    uint64_t port_enqueued(NodeId sw, int link_id) const;
    // emitted == delivered + dropped + in_transit + queued, plus per-port
    // enqueue/dequeue/occupancy balance.  Throws SimError on mismatch.
    void audit_conservation() const;

  private:
    struct Port {
        int link_id;
        int dir;
        bool busy = false;
        PortQueueSet queues;
        Port(int l, int d, const SwitchConfig* cfg, SharedBuffer* shared)
            : link_id(l), dir(d), queues(cfg, shared) {}
    };
    struct SwitchState {
        NodeId node;
        // Heap-allocated so the pointer held by each port survives growth of
        // the switches_ vector during construction.
        std::unique_ptr<SharedBuffer> shared = std::make_unique<SharedBuffer>();
        std::vector<Port> ports;
        int port_of_link(int link_id) const;
    };

    void arrive(NodeId node, Packet pkt);
    void handle_at_switch(SwitchState& sw, Packet pkt);
    void start_service(SwitchState& sw, int port_idx);
    void schedule_arrival(const Packet& pkt, NodeId to, SimTime at);
    int pick_output(SwitchState& sw, const Packet& pkt);

    Simulator& sim_;
    TopologyGraph& topo_;
    SwitchConfig cfg_;
    RngStream& spray_rng_;
    RngStream& red_rng_;
    EndpointHub& hub_;
    RouteTable routes_;
    std::vector<int> switch_index_;  // NodeId -> index into switches_ (-1 for hosts)
    std::vector<SwitchState> switches_;
    FabricCounters counters_;
    SimTime base_rtt_;
};

}  // namespace atpsim

#endif
