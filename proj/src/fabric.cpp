// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "fabric.h"

namespace atpsim {

Fabric::Fabric(Simulator& sim, TopologyGraph& topo, const SwitchConfig& cfg,
               RngStream& spray_rng, RngStream& red_rng, EndpointHub& hub)
    : sim_(sim), topo_(topo), cfg_(cfg), spray_rng_(spray_rng), red_rng_(red_rng), hub_(hub) {
    routes_.build(topo);
    base_rtt_ = topo.base_rtt_ns();
    switch_index_.assign(topo.nodes().size(), -1);
    for (const Node& n : topo.nodes()) {
        if (n.kind == NodeKind::Host)
            continue;
        switch_index_[n.id] = static_cast<int>(switches_.size());
        switches_.emplace_back();
        SwitchState& sw = switches_.back();
        sw.node = n.id;
        sw.shared->accurate_capacity = cfg_.accurate_capacity();
        for (int lid : n.links)
            sw.ports.emplace_back(lid, topo.link(lid).dir_from(n.id), &cfg_, sw.shared.get());
    }
}

int Fabric::SwitchState::port_of_link(int link_id) const {
    for (size_t i = 0; i < ports.size(); ++i)
        if (ports[i].link_id == link_id)
            return static_cast<int>(i);
    throw SimError("switch has no port on the requested link");
}

void Fabric::schedule_arrival(const Packet& pkt, NodeId to, SimTime at) {
    ++counters_.in_transit;
    sim_.schedule(at, EventKind::PacketArrival,
                  sim_.detail("node=%d flow=%u seq=%u %s", to, pkt.flow_id, pkt.seq,
                              pkt.kind == PacketKind::Ack ? "ack" : "data"),
                  [this, pkt, to] { arrive(to, pkt); });
}

SimTime Fabric::host_tx_free(NodeId host) const {
    int uplink = topo_.host_uplink(host);
    const Link& l = topo_.link(uplink);
    return l.busy_until[l.dir_from(host)];
}

SimTime Fabric::send_from_host(const Packet& pkt) {
    SIM_CHECK(topo_.is_host(pkt.src), "send_from_host from a non-host node");
    if (pkt.kind == PacketKind::Ack)
        ++counters_.emitted_acks;
    else
        ++counters_.emitted_data;
    int uplink = topo_.host_uplink(pkt.src);
    const Link& l = topo_.link(uplink);
    SimTime arrival = topo_.transmit(pkt.wire_bytes(), uplink, l.dir_from(pkt.src), sim_.now());
    // Sender-side host delay: pure latency on top of NIC serialization.
    schedule_arrival(pkt, l.peer(pkt.src), arrival + topo_.host_delay());
    return arrival - l.delay;
}

void Fabric::arrive(NodeId node, Packet pkt) {
    SIM_CHECK(counters_.in_transit > 0, "packet arrival without a matching emission");
    --counters_.in_transit;
    if (topo_.is_host(node)) {
        SIM_CHECK(node == pkt.dst, "packet delivered to a host that is not its destination");
        if (pkt.kind == PacketKind::Ack)
            ++counters_.delivered_acks;
        else
            ++counters_.delivered_data;
        hub_.deliver(pkt, sim_.now());
        return;
    }
    handle_at_switch(switches_[switch_index_[node]], pkt);
}

int Fabric::pick_output(SwitchState& sw, const Packet& pkt) {
    const auto& hops = routes_.next_hops(sw.node, pkt.dst);
    size_t choice = 0;
    if (hops.size() > 1) {
        if (pkt.kind == PacketKind::Data && pkt.prio.cls != PriorityTag::Class::Accurate) {
            // Packet spray: uniform over the equal-cost next hops.
            choice = spray_rng_.uniform_int(hops.size());
        } else {
            // Flow-stable ECMP hash over (src, dst, flow, switch).
            uint64_t h = 0x9E3779B97F4A7C15ull;
            for (uint64_t v : {static_cast<uint64_t>(pkt.src), static_cast<uint64_t>(pkt.dst),
                               static_cast<uint64_t>(pkt.flow_id), static_cast<uint64_t>(sw.node)}) {
                h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
                h *= 0xBF58476D1CE4E5B9ull;
                h ^= h >> 29;
            }
            choice = static_cast<size_t>(h % hops.size());
        }
    }
    return sw.port_of_link(hops[choice].first);
}

void Fabric::handle_at_switch(SwitchState& sw, Packet pkt) {
    int port_idx = pick_output(sw, pkt);
    Port& port = sw.ports[port_idx];
    if (port.queues.enqueue(pkt, red_rng_) == PortQueueSet::Enqueue::Dropped) {
        ++counters_.dropped;
        return;
    }
    if (!port.busy)
        start_service(sw, port_idx);
}

void Fabric::start_service(SwitchState& sw, int port_idx) {
    Port& port = sw.ports[port_idx];
    std::optional<Packet> pkt = port.queues.wrr_dequeue();
    if (!pkt)
        return;
    port.busy = true;
    const Link& l = topo_.link(port.link_id);
    SimTime arrival = topo_.transmit(pkt->wire_bytes(), port.link_id, port.dir, sim_.now());
    SimTime wire_done = arrival - l.delay;
    NodeId to = l.head(port.dir);
    // Receiver-side host delay before the endpoint sees the packet.
    schedule_arrival(*pkt, to, topo_.is_host(to) ? arrival + topo_.host_delay() : arrival);
    NodeId sw_node = sw.node;
    sim_.schedule(wire_done, EventKind::TransmitComplete,
                  sim_.detail("node=%d port=%d", sw_node, port_idx), [this, sw_node, port_idx] {
                      SwitchState& s = switches_[switch_index_[sw_node]];
                      s.ports[port_idx].busy = false;
                      start_service(s, port_idx);
                  });
}

uint64_t Fabric::port_enqueued(NodeId sw, int link_id) const {
    const SwitchState& s = switches_[switch_index_[sw]];
    return s.ports[s.port_of_link(link_id)].queues.enqueued;
}

uint64_t Fabric::queued_packets() const {
    uint64_t total = 0;
    for (const SwitchState& sw : switches_)
        for (const Port& p : sw.ports)
            total += static_cast<uint64_t>(p.queues.total_occupancy());
    return total;
}

void Fabric::audit_conservation() const {
    for (const SwitchState& sw : switches_)
        for (const Port& p : sw.ports)
            SIM_CHECK(p.queues.enqueued ==
                          p.queues.dequeued + static_cast<uint64_t>(p.queues.total_occupancy()),
                      "per-port packet balance (enqueued == dequeued + occupancy)");
    uint64_t accounted =
        counters_.delivered() + counters_.dropped + counters_.in_transit + queued_packets();
    SIM_CHECK(counters_.emitted() == accounted,
              "fabric packet conservation (emitted == delivered + dropped + residual)");
}

}  // namespace atpsim
